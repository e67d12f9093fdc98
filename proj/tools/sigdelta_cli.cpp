// sigdelta: design, analyze, simulate and sweep front end.
//
// Exit status: 0 success, 2 usage or input error, 3 invariant-check failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "manifest.hpp"
#include "sigdelta/channels.hpp"
#include "sigdelta/filter_design.hpp"
#include "sigdelta/io.hpp"
#include "sigdelta/simulate.hpp"
#include "sigdelta/spectra.hpp"

namespace fs = std::filesystem;
using namespace sigdelta;
using io::Json;

namespace {

constexpr int kUsage = 2;
constexpr int kInvariant = 3;

struct InvariantFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) { return io::format_double(v); }

void print_kv(const std::string& key, double v) {
  std::printf("%-18s %.10g\n", key.c_str(), v);
}

std::vector<double> log_space(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("need 0 < dmin <= dmax");
  if (n == 0) throw std::invalid_argument("--points must be >= 1");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    out[i] = std::pow(10.0, std::log10(lo) + t * (std::log10(hi) - std::log10(lo)));
  }
  out.back() = n == 1 ? lo : hi;
  return out;
}

// ---------------------------------------------------------------- design

struct DesignArgs {
  double L = 2.0;
  double sigma2x = 1.0;
  double distortion = 0.0;
  std::optional<std::size_t> order;
  bool unconstrained = false;
  std::size_t taps = 4096;
  std::optional<double> transition;
  std::string weight;
  std::size_t grid = FrequencyGrid::kDefaultSize;
  std::string out = "filter.json";
};

int cmd_design(const DesignArgs& a, cli::Manifest& manifest) {
  if (a.order.has_value() == a.unconstrained)
    throw std::invalid_argument("design: give exactly one of --order or --unconstrained");
  if (a.unconstrained && !a.weight.empty())
    throw std::invalid_argument("design: --weight applies to --order designs only");

  const BandSpec spec(a.L, a.sigma2x);
  const double bound = rate_lower_bound(spec, a.distortion);
  Json meta;
  meta["L"] = a.L;
  meta["sigma2x"] = a.sigma2x;
  meta["distortion"] = a.distortion;

  DesignResult result;
  std::optional<UnconstrainedDesign> unc;
  if (a.unconstrained) {
    UnconstrainedOptions opts;
    opts.taps = a.taps;
    if (a.transition) opts.transition = *a.transition;
    unc = design_unconstrained(FrequencyGrid(a.grid), spec, a.distortion, opts);
    result = unc->result;
    meta["design"] = "unconstrained";
    meta["transition"] = unc->transition;
    meta["log_integral"] = unc->log_integral;
    meta["monic_error"] = unc->monic_error;
    meta["max_level_deviation"] = unc->max_level_deviation;
    meta["truncation_tail"] = unc->truncation_tail;
  } else if (!a.weight.empty()) {
    std::vector<double> w;
    try {
      w = read_grid_csv(a.weight);
    } catch (const std::exception& e) {
      throw std::invalid_argument(std::string("design: unreadable weight file: ") + e.what());
    }
    manifest.add_input(a.weight);
    const FrequencyGrid grid(w.size());
    result = design_fwmse_predictor(grid, spec, FrequencyWeight(std::move(w)), a.distortion, *a.order);
    meta["design"] = "fwmse";
    meta["weight_file"] = fs::path(a.weight).filename().string();
  } else {
    result = design_fir_predictor(spec, a.distortion, *a.order);
    meta["design"] = "fir";
  }
  meta["method"] = to_string(result.diagnostics.method);
  meta["order"] = result.filter.order();
  meta["pred_error_var"] = result.pred_error_var;
  meta["rate_bits"] = result.rate_bits;
  meta["rate_lower_bound"] = bound;
  meta["rate_gap_bits"] = result.rate_bits - bound;
  meta["normal_equation_residual"] = result.diagnostics.normal_equation_residual;

  if (fs::path(a.out).extension() == ".csv") {
    io::write_filter_csv(a.out, result.filter);
  } else {
    io::write_filter_json(a.out, io::FilterFile{result.filter, a.L, meta});
  }
  manifest.add_output(a.out);
  manifest.parameters() = meta;

  for (std::size_t n = 1; n <= std::min<std::size_t>(result.filter.order(), 8); ++n)
    print_kv("c_" + std::to_string(n), result.filter.tap(n));
  print_kv("sigma_star2", result.pred_error_var);
  print_kv("rate_bits", result.rate_bits);
  print_kv("rate_lower_bound", bound);
  print_kv("rate_gap_bits", result.rate_bits - bound);
  std::printf("%-18s %s\n", "method", to_string(result.diagnostics.method).c_str());

  if (unc) {
    print_kv("log_integral", unc->log_integral);
    print_kv("monic_error", unc->monic_error);
    print_kv("max_level_dev", unc->max_level_deviation);
    if (!unc->within_tolerance)
      std::fprintf(stderr, "warning: rate gap %.4g bits exceeds tolerance %.4g\n", unc->rate_gap,
                   UnconstrainedOptions{}.max_rate_gap);
    if (std::abs(unc->log_integral) > 1e-3 || std::abs(unc->monic_error) > 1e-6)
      throw InvariantFailure("unconstrained factor is not monic with zero log-integral");
  }
  if (!(result.pred_error_var > 0.0) || result.pred_error_var > spec.sigma2_x() * (1.0 + 1e-12) ||
      result.rate_bits < bound - 1e-9)
    throw InvariantFailure("design result violates 0 < sigma*^2 <= sigma2_x or rate >= bound");
  return 0;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string filter;
  double L = 2.0;
  double sigma2x = 1.0;
  double dmin = 1e-3;
  double dmax = 1e-1;
  std::size_t points = 25;
  std::string out = "analyze.csv";
};

int cmd_analyze(const AnalyzeArgs& a, cli::Manifest& manifest) {
  const auto file = io::read_filter(a.filter);
  manifest.add_input(a.filter);
  if (file.oversampling && *file.oversampling != a.L)
    throw std::invalid_argument("analyze: filter was designed for L = " + fmt(*file.oversampling) +
                                " but --L is " + fmt(a.L));
  const BandSpec spec(a.L, a.sigma2x);
  const auto grid = log_space(a.dmin, a.dmax, a.points);

  std::ostringstream csv;
  csv << "D,rate_sd,rate_dpcm,rate_bound,rate_postscaled\n";
  double worst = 0.0;
  for (double d : grid) {
    const auto map = dual_noise_variance(spec, file.filter, d);
    const auto sd = sigma_delta_rd(spec, file.filter, map.sigma2_sd);
    const auto dp = dpcm_rd(spec, file.filter, map.sigma2_dpcm);
    worst = std::max(worst, std::abs(sd.mutual_info_bits - dp.mutual_info_bits));
    csv << fmt(d) << ',' << fmt(sd.mutual_info_bits) << ',' << fmt(dp.mutual_info_bits) << ','
        << fmt(rate_lower_bound(spec, d)) << ',' << fmt(post_scaling(spec, d).rate_bits) << '\n';
  }
  io::write_text_file(a.out, csv.str());
  manifest.add_output(a.out);
  manifest.parameters() = {{"filter", fs::path(a.filter).filename().string()},
                           {"L", a.L},
                           {"sigma2x", a.sigma2x},
                           {"dmin", a.dmin},
                           {"dmax", a.dmax},
                           {"points", a.points}};
  std::printf("%zu rows written to %s (max |rate_sd - rate_dpcm| = %.3g)\n", grid.size(),
              a.out.c_str(), worst);
  if (worst > 1e-10) throw InvariantFailure("sigma-delta and DPCM rates disagree");
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::size_t> trace_block;
  std::string trace_out;
  std::string out = "report.json";
};

void check_report(const SimConfig& cfg, const SimReport& r) {
  const bool dithered = std::holds_alternative<DitheredQuantizer>(cfg.noise);
  const auto finite = [](const Estimate& e) { return std::isfinite(e.mean) && std::isfinite(e.std_error); };
  if (!finite(r.mse_all) || !finite(r.mse_full_block) || !finite(r.var_u))
    throw InvariantFailure("non-finite statistics in the report");
  if (r.overloaded_blocks > cfg.num_blocks || r.overloaded_samples < r.overloaded_blocks)
    throw InvariantFailure("inconsistent overload counts");
  if (!dithered && r.overloaded_samples != 0) throw InvariantFailure("AWGN loop reported overload");
  if (r.mse_conditional.count + r.overloaded_blocks != cfg.num_blocks)
    throw InvariantFailure("conditional block count does not match");
}

int cmd_simulate(const SimulateArgs& a, cli::Manifest& manifest) {
  SimConfig cfg = io::read_sim_config(a.config);
  manifest.add_input(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.threads) cfg.threads = *a.threads;
  manifest.set_seed(cfg.seed);
  manifest.parameters() = io::sim_config_to_json(cfg);

  const SimReport report = monte_carlo(cfg);
  Json j;
  j["config"] = io::sim_config_to_json(cfg);
  j["report"] = io::sim_report_to_json(report);
  io::write_text_file(a.out, j.dump(2) + "\n");
  manifest.add_output(a.out);

  if (a.trace_block) {
    if (*a.trace_block >= cfg.num_blocks) throw std::invalid_argument("--trace-block out of range");
    const std::string path = a.trace_out.empty() ? a.out + ".trace.csv" : a.trace_out;
    io::write_trace_csv(path, simulate_block(cfg, *a.trace_block));
    manifest.add_output(path);
  }

  print_kv("mse_all", report.mse_all.mean);
  print_kv("mse_all_stderr", report.mse_all.std_error);
  print_kv("analytic_d", report.analytic_d);
  print_kv("var_u", report.var_u.mean);
  print_kv("analytic_var_u", report.analytic_var_u);
  print_kv("rate_bits", report.analytic_rate_bits);
  std::printf("%-18s %zu / %zu\n", "overloaded_blocks", report.overloaded_blocks, cfg.num_blocks);
  if (report.bound_pol) print_kv("bound_pol", *report.bound_pol);
  check_report(cfg, report);
  return 0;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
  std::string axis;
  std::vector<double> values;
  double L = 2.0;
  double sigma2x = 1.0;
  double distortion = 0.05;
  std::size_t order = 1;
  std::optional<double> noise_var;
  int rate_bits = 0;
  std::string rate_mode = "excess";
  std::size_t block_len = 4096;
  std::size_t blocks = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out = "sweep.csv";
};

struct SweepRow {
  double L = 0.0;
  std::size_t order = 0;
  FirFilter filter;
  double pred_error_var = std::numeric_limits<double>::quiet_NaN();
  double sigma2 = 0.0;
};

// Filter and noise variance for one point of the sweep.
SweepRow design_point(const BandSpec& spec, double d, std::size_t order,
                      std::optional<double> noise_var) {
  SweepRow row;
  row.L = spec.oversampling();
  row.order = order;
  if (order > 0) {
    auto res = design_fir_predictor(spec, d, order);
    row.filter = std::move(res.filter);
    row.pred_error_var = res.pred_error_var;
  } else {
    row.pred_error_var = spec.sigma2_x();
  }
  row.sigma2 = noise_var ? *noise_var : d / band_energy(row.filter, row.L);
  return row;
}

int cmd_sweep(const SweepArgs& a, cli::Manifest& manifest) {
  static const std::vector<std::string> axes = {"order", "L", "rate", "blocklen"};
  if (std::find(axes.begin(), axes.end(), a.axis) == axes.end())
    throw std::invalid_argument("sweep: unknown axis '" + a.axis + "' (order, L, rate, blocklen)");
  if (a.values.empty()) throw std::invalid_argument("sweep: --values is empty");
  if (a.rate_mode != "excess" && a.rate_mode != "bits")
    throw std::invalid_argument("sweep: --rate-mode must be 'excess' or 'bits'");
  const bool quantized = a.axis == "rate" || a.axis == "blocklen";
  if (quantized && a.blocks == 0) throw std::invalid_argument("sweep: --blocks must be > 0 for this axis");
  manifest.set_seed(a.seed);

  std::ostringstream csv;
  csv << "axis,value,L,order,D,sigma2_sd,pred_error_var,rate_bits,rate_lower_bound,"
         "quantizer_bits,excess_rate,block_len,bound_pol,blocks,mse,mse_stderr,overload_rate\n";

  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double v = a.values[i];
    double L = a.L;
    std::size_t order = a.order;
    std::size_t block_len = a.block_len;
    if (a.axis == "order") {
      if (v < 0 || v != std::floor(v)) throw std::invalid_argument("sweep: orders must be integers >= 0");
      order = static_cast<std::size_t>(v);
    } else if (a.axis == "L") {
      L = v;
    } else if (a.axis == "blocklen") {
      if (v < 1 || v != std::floor(v)) throw std::invalid_argument("sweep: block lengths must be integers >= 1");
      block_len = static_cast<std::size_t>(v);
    }

    const BandSpec spec(L, a.sigma2x);
    SweepRow row = design_point(spec, a.distortion, order, a.noise_var);

    std::optional<int> rbits;
    if (quantized) {
      rbits = a.rate_bits;
      if (a.axis == "rate" && a.rate_mode == "bits") {
        if (v < 1 || v != std::floor(v)) throw std::invalid_argument("sweep: rates must be integers >= 1");
        rbits = static_cast<int>(v);
      }
      if (*rbits < 1) throw std::invalid_argument("sweep: --rate-bits >= 1 is required for quantized sweeps");
      if (a.axis == "rate" && a.rate_mode == "excess") {
        // Choose the noise variance so that the mutual information is R - delta.
        const double denom = std::exp2(2.0 * (*rbits - v)) - 1.0 - total_energy(row.filter);
        if (!(denom > 0.0)) throw std::invalid_argument("sweep: excess rate too large for --rate-bits");
        row.sigma2 = a.sigma2x / denom;
      }
    }

    const auto rp = sigma_delta_rd(spec, row.filter, row.sigma2);
    const double d = rp.distortion;
    std::string excess = "", bound = "", mse = "", mse_se = "", ol = "", nblocks = "";
    if (quantized) {
      SimConfig cfg;
      cfg.spec = spec;
      cfg.filter = row.filter;
      cfg.noise = DitheredQuantizer{QuantizerSpec(*rbits, row.sigma2)};
      cfg.block_len = block_len;
      cfg.num_blocks = a.blocks;
      cfg.seed = derive_seed(a.seed, i, 2);
      cfg.threads = a.threads;
      const auto rep = monte_carlo(cfg);
      excess = fmt(*rep.excess_rate);
      bound = fmt(*rep.bound_pol);
      mse = fmt(rep.mse_conditional.mean);
      mse_se = fmt(rep.mse_conditional.std_error);
      ol = fmt(rep.overload_block_rate.mean);
      nblocks = std::to_string(a.blocks);
    } else if (a.blocks > 0) {
      SimConfig cfg;
      cfg.spec = spec;
      cfg.filter = row.filter;
      cfg.noise = AwgnNoise{row.sigma2};
      cfg.block_len = block_len;
      cfg.num_blocks = a.blocks;
      cfg.seed = derive_seed(a.seed, i, 2);
      cfg.threads = a.threads;
      const auto rep = monte_carlo(cfg);
      mse = fmt(rep.mse_all.mean);
      mse_se = fmt(rep.mse_all.std_error);
      nblocks = std::to_string(a.blocks);
    }

    csv << a.axis << ',' << fmt(v) << ',' << fmt(L) << ',' << row.order << ',' << fmt(d) << ','
        << fmt(row.sigma2) << ',' << fmt(row.pred_error_var) << ',' << fmt(rp.mutual_info_bits)
        << ',' << fmt(rate_lower_bound(spec, d)) << ',' << (rbits ? std::to_string(*rbits) : "")
        << ',' << excess << ',' << (quantized || a.blocks > 0 ? std::to_string(block_len) : "")
        << ',' << bound << ',' << nblocks << ',' << mse << ',' << mse_se << ',' << ol << '\n';
  }

  io::write_text_file(a.out, csv.str());
  manifest.add_output(a.out);
  Json params{{"axis", a.axis}, {"values", a.values}, {"L", a.L}, {"sigma2x", a.sigma2x},
              {"distortion", a.distortion}, {"order", a.order}, {"rate_bits", a.rate_bits},
              {"rate_mode", a.rate_mode}, {"block_len", a.block_len}, {"blocks", a.blocks}};
  params["noise_var"] = a.noise_var ? Json(*a.noise_var) : Json(nullptr);
  manifest.parameters() = params;
  std::printf("%zu rows written to %s\n", a.values.size(), a.out.c_str());
  return 0;
}

// ---------------------------------------------------------------- dispatch

int run(const std::vector<std::string>& args, const std::string& manifest_override = "");

// Re-executes the command recorded in a manifest and compares output digests.
int cmd_rerun(const std::string& path) {
  const Json m = Json::parse(io::read_text_file(path));
  std::vector<std::string> argv = m.at("argv").get<std::vector<std::string>>();
  const std::string fresh = path + ".rerun.json";
  const int rc = run(argv, fresh);
  if (rc != 0) return rc;
  const Json now = Json::parse(io::read_text_file(fresh));
  fs::remove(fresh);
  if (now.at("outputs") != m.at("outputs")) {
    std::fprintf(stderr, "rerun: output digests differ from %s\n", path.c_str());
    return kInvariant;
  }
  std::printf("rerun: outputs reproduced bit-exactly\n");
  return 0;
}

int run(const std::vector<std::string>& args, const std::string& manifest_override) {
  CLI::App app{"Sigma-delta / DPCM rate-distortion toolkit", "sigdelta"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SIGDELTA_VERSION);

  std::string manifest_out;
  DesignArgs da;
  auto* design = app.add_subcommand("design", "Design a feedback filter");
  design->add_option("--L", da.L, "Oversampling ratio")->required();
  design->add_option("--sigma2x", da.sigma2x, "Source variance")->required();
  design->add_option("--distortion", da.distortion, "Target in-band distortion D")->required();
  auto* ord = design->add_option("--order", da.order, "FIR order p");
  auto* unc = design->add_flag("--unconstrained", da.unconstrained, "Cepstral two-level design");
  ord->excludes(unc);
  design->add_option("--taps", da.taps, "Taps kept in the unconstrained design")->needs(unc);
  design->add_option("--transition", da.transition, "Transition half-width (rad)")->needs(unc);
  design->add_option("--weight", da.weight, "Frequency weight CSV (omega,value)");
  design->add_option("--grid", da.grid, "Spectral grid size");
  design->add_option("--out,-o", da.out, "Filter output (.json or .csv)");

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "Rate-distortion table for a filter");
  analyze->add_option("--filter", aa.filter, "Filter file")->required()->check(CLI::ExistingFile);
  analyze->add_option("--L", aa.L)->required();
  analyze->add_option("--sigma2x", aa.sigma2x)->required();
  analyze->add_option("--dmin", aa.dmin);
  analyze->add_option("--dmax", aa.dmax);
  analyze->add_option("--points", aa.points);
  analyze->add_option("--out,-o", aa.out);

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo run of the loop");
  simulate->add_option("--config", sa.config, "SimConfig JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--seed", sa.seed, "Override the config seed");
  simulate->add_option("--threads", sa.threads);
  simulate->add_option("--trace-block", sa.trace_block, "Also write the per-sample trace of a block");
  simulate->add_option("--trace-out", sa.trace_out);
  simulate->add_option("--out,-o", sa.out);

  SweepArgs wa;
  auto* sweep = app.add_subcommand("sweep", "Long-form CSV over one parameter");
  sweep->add_option("--axis", wa.axis, "order | L | rate | blocklen")->required();
  sweep->add_option("--values", wa.values, "Sweep values")->required()->delimiter(',');
  sweep->add_option("--L", wa.L);
  sweep->add_option("--sigma2x", wa.sigma2x);
  sweep->add_option("--distortion", wa.distortion);
  sweep->add_option("--order", wa.order, "FIR order (0 keeps C = 0)");
  sweep->add_option("--noise-var", wa.noise_var, "Fixed loop noise variance instead of D");
  sweep->add_option("--rate-bits", wa.rate_bits, "Quantizer bits for rate/blocklen axes");
  sweep->add_option("--rate-mode", wa.rate_mode, "excess (values are R - I) or bits");
  sweep->add_option("--block-len", wa.block_len);
  sweep->add_option("--blocks", wa.blocks, "Monte Carlo blocks per point (0: analytic only)");
  sweep->add_option("--seed", wa.seed);
  sweep->add_option("--threads", wa.threads);
  sweep->add_option("--out,-o", wa.out);

  std::string rerun_path;
  auto* rerun = app.add_subcommand("rerun", "Re-execute a run manifest and verify its outputs");
  rerun->add_option("manifest", rerun_path)->required()->check(CLI::ExistingFile);

  for (auto* sub : {design, analyze, simulate, sweep})
    sub->add_option("--manifest", manifest_out, "Manifest path (default <out>.manifest.json)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (rerun->parsed()) return cmd_rerun(rerun_path);

    cli::Manifest manifest(app.get_subcommands().front()->get_name(), args);
    int rc = 0;
    std::string out;
    if (design->parsed()) {
      rc = cmd_design(da, manifest);
      out = da.out;
    } else if (analyze->parsed()) {
      rc = cmd_analyze(aa, manifest);
      out = aa.out;
    } else if (simulate->parsed()) {
      rc = cmd_simulate(sa, manifest);
      out = sa.out;
    } else {
      rc = cmd_sweep(wa, manifest);
      out = wa.out;
    }
    const std::string mpath = !manifest_override.empty() ? manifest_override
                              : !manifest_out.empty()    ? manifest_out
                                                         : cli::manifest_path_for(out);
    manifest.write(mpath);
    return rc;
  } catch (const InvariantFailure& e) {
    std::fprintf(stderr, "invariant check failed: %s\n", e.what());
    return kInvariant;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}
