// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures. Usage: acceptance --cli <path-to-sigdelta> [--only N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "oracles.hpp"
#include "sigdelta/channels.hpp"
#include "sigdelta/filter_design.hpp"
#include "sigdelta/io.hpp"
#include "sigdelta/simulate.hpp"

using namespace sigdelta;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string g_cli;

FirFilter reference_filter() { return design_fir_predictor(BandSpec(4.0, 1.0), 1e-2, 2).filter; }

void duality(Outcome& o) {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_rate = 0.0, worst_d = 0.0;
  const int cases = 480;
  for (int i = 0; i < cases; ++i) {
    const double L = 1.0 + 15.0 * u(rng);
    const std::size_t p = 1 + static_cast<std::size_t>(24.0 * u(rng));
    std::vector<double> taps(p);
    for (double& c : taps) c = 2.0 * u(rng) - 1.0;
    const double d = std::pow(10.0, -5.0 + 5.0 * u(rng));
    const BandSpec spec(L, 0.1 + 10.0 * u(rng));
    const FirFilter f(taps);
    const auto m = dual_noise_variance(spec, f, d);
    const auto sd = sigma_delta_rd(spec, f, m.sigma2_sd);
    const auto dp = dpcm_rd(spec, f, m.sigma2_dpcm);
    worst_rate = std::max(worst_rate, std::abs(sd.mutual_info_bits - dp.mutual_info_bits));
    worst_d = std::max(worst_d, std::abs(sd.distortion - dp.distortion) / d);
  }
  o.detail << cases << " cases, max |rate diff| " << worst_rate << " bits, max rel D diff " << worst_d;
  o.require(worst_rate <= 1e-10, "rate agreement 1e-10");
  o.require(worst_d <= 1e-12, "distortion agreement 1e-12");
}

void one_tap(Outcome& o) {
  const double L = 2.0, d = 0.05;
  const std::vector<double> r{oracle::flat_autocorr(L, 1.0, 0), oracle::flat_autocorr(L, 1.0, 1)};
  double best_c = 0.0, best_v = INFINITY;
  for (long i = -2000000; i <= 2000000; ++i) {
    const double c = 1e-6 * static_cast<double>(i);
    const double v = oracle::objective(r, L * d, {c});
    if (v < best_v) {
      best_v = v;
      best_c = c;
    }
  }
  const auto res = design_fir_predictor(BandSpec(L, 1.0), d, 1);
  const double c1 = res.filter.tap(1);
  o.detail << "c1 " << c1 << " (grid " << best_c << "), sigma*^2 " << res.pred_error_var << " (grid " << best_v
           << ")";
  o.require(std::abs(c1 - 0.578745) <= 1e-5, "c1 = 0.578745");
  o.require(std::abs(res.pred_error_var - 0.631559) <= 1e-5, "sigma*^2 = 0.631559");
  o.require(std::abs(c1 - best_c) <= 1e-5 && std::abs(res.pred_error_var - best_v) <= 1e-5,
            "agreement with the grid search");
}

void infinite_order(Outcome& o) {
  const BandSpec spec(2.0, 1.0);
  const double d = 0.05;
  const double target = 0.1 * (std::sqrt(21.0) - 1.0);
  const double bound = 0.25 * std::log2(21.0);
  double prev = INFINITY;
  bool monotone = true, above = true, formula = true;
  DesignResult last;
  for (std::size_t p = 1; p <= 256; ++p) {
    last = design_fir_predictor(spec, d, p);
    monotone = monotone && last.rate_bits <= prev + 1e-12;
    above = above && last.rate_bits >= bound - 1e-12;
    formula = formula &&
              std::abs(last.rate_bits - 0.5 * std::log2(1.0 + last.pred_error_var / (2.0 * d))) < 1e-12;
    prev = last.rate_bits;
  }
  const double rel = std::abs(last.pred_error_var - target) / target;
  o.detail << "p=256 sigma*^2 " << last.pred_error_var << " (rel. dev " << rel << "), rate " << last.rate_bits
           << " vs bound " << bound;
  o.require(rel <= 0.02, "within 2% of 0.358258");
  o.require(monotone, "rate nonincreasing in p");
  o.require(above, "rate above the bound");
  o.require(formula, "rate formula");
  o.require(std::abs(entropy_power_limit(spec, d).pred_limit - target) < 1e-12, "closed-form limit");
}

void unconstrained(Outcome& o) {
  const BandSpec spec(2.0, 1.0);
  UnconstrainedOptions opt;
  opt.taps = 4096;
  opt.transition = oracle::pi / 16.0;
  const auto u = design_unconstrained(FrequencyGrid(), spec, 0.05, opt);
  const double bound = 0.25 * std::log2(21.0);
  o.detail << "log integral " << u.log_integral << ", monic error " << u.monic_error << ", rate "
           << u.result.rate_bits << " (gap " << u.result.rate_bits - bound << " bits)";
  o.require(std::abs(u.log_integral) <= 1e-3, "log integral within 1e-3");
  o.require(std::abs(u.monic_error) <= 1e-6, "monic within 1e-6");
  o.require(u.result.filter.order() == 4096, "4096 taps");
  o.require(std::abs(u.result.rate_bits - bound) <= 5e-3, "rate within 5e-3 bits of 1.0981");
}

void awgn_loop(Outcome& o) {
  const BandSpec spec(4.0, 1.0);
  SimConfig cfg;
  cfg.spec = spec;
  cfg.filter = reference_filter();
  cfg.noise = AwgnNoise{dual_noise_variance(spec, cfg.filter, 1e-2).sigma2_sd};
  cfg.block_len = std::size_t{1} << 16;
  cfg.num_blocks = 16;
  cfg.seed = 5;
  const auto r = monte_carlo(cfg);
  const double samples = static_cast<double>(cfg.num_blocks * (cfg.block_len - cfg.filter.order()));
  o.detail << samples << " samples, mse " << r.mse_all.mean << " +- " << r.mse_all.std_error << " vs "
           << r.analytic_d << ", var(U) " << r.var_u.mean << " +- " << r.var_u.std_error << " vs "
           << r.analytic_var_u;
  o.require(samples >= 1e6, "1e6 steady-state samples");
  o.require(std::abs(r.mse_all.mean - r.analytic_d) <= 3.0 * r.mse_all.std_error, "MSE within 3 stderr");
  o.require(std::abs(r.var_u.mean - r.analytic_var_u) <= 3.0 * r.var_u.std_error, "var(U) within 3 stderr");
}

void dither_statistics(Outcome& o) {
  const BandSpec spec(4.0, 1.0);
  const auto f = reference_filter();
  const double s2 = dual_noise_variance(spec, f, 1e-2).sigma2_sd;
  const QuantizerSpec q(4, s2);
  const std::size_t n = 4096;
  std::vector<double> noise;
  std::size_t blocks_checked = 0;
  bool equivalent = true;
  for (std::uint64_t b = 0; noise.size() < 100000; ++b) {
    const auto x = synthesize_band_limited(spec, std::nullopt, n, derive_seed(31, b, 0));
    const auto t = run_dithered_loop(x, f, q, 4.0, derive_seed(31, b, 1));
    if (std::any_of(t.overload.begin(), t.overload.end(), [](auto v) { return v != 0; })) continue;
    noise.insert(noise.end(), t.n_err.begin(), t.n_err.end());
  }
  // Equivalence on blocks at a rate that overloads some of the time.
  for (std::uint64_t b = 0; b < 200; ++b) {
    const auto x = synthesize_band_limited(spec, std::nullopt, n, derive_seed(32, b, 0));
    const auto lo = run_dithered_loop(x, f, QuantizerSpec(2, s2), 4.0, derive_seed(32, b, 1));
    if (std::any_of(lo.overload.begin(), lo.overload.end(), [](auto v) { return v != 0; })) continue;
    const auto hi = run_dithered_loop(x, f, QuantizerSpec(16, s2), 4.0, derive_seed(32, b, 1));
    ++blocks_checked;
    equivalent = equivalent && lo.n_err == hi.n_err && lo.u == hi.u && lo.xhat == hi.xhat;
  }
  noise.resize(100000);
  const auto m = static_cast<double>(noise.size());
  double mean = 0.0;
  for (double v : noise) mean += v;
  mean /= m;
  double var = 0.0;
  for (double v : noise) var += (v - mean) * (v - mean);
  var /= m - 1.0;
  const double se = std::sqrt(var / m);

  const double step = q.step();
  std::sort(noise.begin(), noise.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < noise.size(); ++i) {
    const double cdf = std::clamp(noise[i] / step + 0.5, 0.0, 1.0);
    ks = std::max({ks, std::abs(static_cast<double>(i + 1) / m - cdf), std::abs(cdf - static_cast<double>(i) / m)});
  }
  const double ks_crit = 1.6276 / std::sqrt(m);
  o.detail << "mean " << mean << " (se " << se << "), var/sigma2 " << var / s2 << ", KS " << ks << " (crit "
           << ks_crit << "), equivalence on " << blocks_checked << " blocks";
  o.require(std::abs(mean) <= 3.0 * se, "mean within 3 stderr");
  o.require(std::abs(var / s2 - 1.0) <= 0.01, "variance within 1%");
  o.require(ks < ks_crit, "KS at 1%");
  o.require(blocks_checked > 0 && equivalent, "bit-exact reference-system equivalence");
}

void overload(Outcome& o) {
  const BandSpec spec(4.0, 1.0);
  const auto f = reference_filter();
  const double s2 = dual_noise_variance(spec, f, 1e-2).sigma2_sd;
  const double info = sigma_delta_rd(spec, f, s2).mutual_info_bits;
  SimConfig cfg;
  cfg.spec = spec;
  cfg.filter = f;
  cfg.noise = DitheredQuantizer{QuantizerSpec(static_cast<int>(std::ceil(info)) + 1, s2)};
  cfg.block_len = 4096;
  cfg.num_blocks = 10000;
  cfg.seed = 7;
  const auto r = monte_carlo(cfg);
  const double delta = overload_rate_penalty(1e-3, 10000);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  bool round_trip = true;
  for (int i = 0; i < 100; ++i) {
    const double p = std::pow(10.0, -15.0 * u(rng)) * 0.999;
    const auto n = static_cast<std::size_t>(1.0 + 1e7 * u(rng));
    round_trip = round_trip && overload_bound(overload_rate_penalty(p, n), n) <= p * (1.0 + 1e-12);
  }
  o.detail << "R = " << std::get<DitheredQuantizer>(cfg.noise).quantizer.rate_bits()
           << " bits, observed block rate " << r.overload_block_rate.mean << " vs bound " << *r.bound_pol
           << ", delta(1e-3, 1e4) " << delta;
  o.require(r.overload_block_rate.mean <= *r.bound_pol, "observed rate below the bound");
  o.require(std::abs(delta - 1.7434) <= 1e-3, "delta = 1.7434");
  o.require(round_trip, "bound(delta(P)) <= P");
}

void compound_class(Outcome& o) {
  const BandSpec spec(4.0, 1.0);
  const auto f = reference_filter();
  const double s2 = dual_noise_variance(spec, f, 1e-2).sigma2_sd;
  const double info = sigma_delta_rd(spec, f, s2).mutual_info_bits;
  std::vector<std::pair<std::string, Estimate>> runs;
  for (const auto& name : source_shape_names()) {
    SimConfig cfg;
    cfg.spec = spec;
    cfg.filter = f;
    cfg.noise = DitheredQuantizer{QuantizerSpec(static_cast<int>(std::ceil(info)) + 1, s2)};
    cfg.block_len = 4096;
    cfg.num_blocks = 400;
    cfg.seed = 9;
    cfg.source_shape = make_source_shape(name, spec);
    runs.emplace_back(name, monte_carlo(cfg).mse_conditional);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    o.detail << (i ? ", " : "") << runs[i].first << " " << runs[i].second.mean;
    for (std::size_t j = i + 1; j < runs.size(); ++j) {
      const double se = std::hypot(runs[i].second.std_error, runs[j].second.std_error);
      worst = std::max(worst, std::abs(runs[i].second.mean - runs[j].second.mean) / se);
    }
  }
  o.detail << "; max pairwise z " << worst;
  o.require(runs.size() >= 5, "five shapes");
  o.require(worst <= 3.0, "pairwise within 3 combined stderr");
}

int run(const std::string& cmd) {
  const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void determinism(Outcome& o) {
  if (g_cli.empty() || !fs::exists(g_cli)) {
    o.require(false, "CLI binary not found (pass --cli)");
    return;
  }
  const fs::path dir = fs::temp_directory_path() / "sigdelta_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = "\"" + g_cli + "\"";
  const std::string d = dir.string() + "/";

  io::Json cfg = {{"L", 4},          {"sigma2x", 1.0},   {"seed", 123},
                  {"block_len", 1024}, {"num_blocks", 16}, {"filter_file", "filter.json"},
                  {"noise", {{"model", "dithered"}, {"rate_bits", 3}, {"distortion", 0.01}}}};
  io::write_text_file(d + "sim.json", cfg.dump(2));

  struct Cmd {
    std::string name;
    std::string args;  // %s is replaced by the run tag
    std::vector<std::string> outputs;
  };
  const std::vector<Cmd> cmds = {
      {"design", "design --L 4 --sigma2x 1 --distortion 0.01 --order 2 --out " + d + "f_%s.json",
       {"f_%s.json"}},
      {"design-unconstrained",
       "design --L 2 --sigma2x 1 --distortion 0.05 --unconstrained --taps 512 --out " + d + "u_%s.csv",
       {"u_%s.csv"}},
      {"analyze", "analyze --filter " + d + "filter.json --L 4 --sigma2x 1 --points 9 --out " + d + "a_%s.csv",
       {"a_%s.csv"}},
      {"simulate",
       "simulate --config " + d + "sim.json --threads 2 --trace-block 3 --trace-out " + d + "t_%s.csv --out " + d +
           "s_%s.json",
       {"s_%s.json", "t_%s.csv"}},
      {"sweep", "sweep --axis rate --values 0.5,1,2 --rate-bits 4 --L 4 --sigma2x 1 --order 2 --block-len 1024 --blocks 20 "
                "--seed 4 --out " + d + "w_%s.csv",
       {"w_%s.csv"}},
      {"sweep-order", "sweep --axis order --values 1,2,4,8 --L 2 --distortion 0.05 --out " + d + "o_%s.csv",
       {"o_%s.csv"}},
  };
  auto fill = [](std::string s, const std::string& tag) {
    for (auto pos = s.find("%s"); pos != std::string::npos; pos = s.find("%s")) s.replace(pos, 2, tag);
    return s;
  };

  if (run(cli + " design --L 4 --sigma2x 1 --distortion 0.01 --order 2 --out " + d + "filter.json") != 0) {
    o.require(false, "reference design");
    return;
  }
  int identical = 0;
  for (const auto& c : cmds) {
    const int a = run(cli + " " + fill(c.args, "a"));
    const int b = run(cli + " " + fill(c.args, "b"));
    bool same = a == 0 && b == 0;
    for (const auto& out : c.outputs) {
      const auto pa = dir / fill(out, "a");
      const auto pb = dir / fill(out, "b");
      same = same && fs::exists(pa) && fs::exists(pb) && slurp(pa) == slurp(pb);
    }
    // The manifest replays the run and checks the output digests.
    const auto manifest = dir / (fill(c.outputs.front(), "a") + ".manifest.json");
    same = same && run(cli + " rerun " + manifest.string()) == 0;
    if (same) ++identical;
    o.require(same, c.name + " reproducible");
  }
  o.detail << identical << "/" << cmds.size() << " command runs byte-identical and replayed from manifests";
  fs::remove_all(dir);
}

struct Criterion {
  int id;
  std::string title;
  double limit_s;
  std::function<void(Outcome&)> body;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc) g_cli = argv[++i];
    else if (a == "--only" && i + 1 < argc) only = std::atoi(argv[++i]);
  }
  const std::vector<Criterion> criteria = {
      {1, "duality of the two channels", 5, duality},
      {2, "one-tap optimum vs grid search", 5, one_tap},
      {3, "p = 256 approaches the entropy-power limit", 10, infinite_order},
      {4, "unconstrained cepstral design", 10, unconstrained},
      {5, "AWGN loop vs analytic distortion", 60, awgn_loop},
      {6, "dithered quantizer statistics", 60, dither_statistics},
      {7, "overload bound", 120, overload},
      {8, "compound-class robustness", 120, compound_class},
      {9, "CLI determinism", 600, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (only && c.id != only) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.limit_s) o.require(false, "runtime limit " + std::to_string(c.limit_s) + " s");
    if (!o.pass) ++failures;
    std::printf("%s criterion %d (%s): %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title.c_str(),
                o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  return failures;
}
