#include "sigdelta/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sigdelta::io {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

// ---------------------------------------------------------------------------

Json filter_to_json(const FilterFile& f) {
  Json j;
  j["taps"] = Json::array();
  for (double c : f.filter.taps()) j["taps"].push_back(c);
  if (f.oversampling) j["L"] = *f.oversampling;
  j["meta"] = f.meta;
  return j;
}

FilterFile filter_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("taps") || !j["taps"].is_array())
    throw std::invalid_argument("filter JSON: missing 'taps' array");
  FilterFile f;
  std::vector<double> taps;
  for (const auto& v : j["taps"]) {
    if (!v.is_number()) throw std::invalid_argument("filter JSON: taps must be numbers");
    taps.push_back(v.get<double>());
  }
  f.filter = FirFilter(std::move(taps));
  if (j.contains("L") && !j["L"].is_null()) f.oversampling = j["L"].get<double>();
  if (j.contains("meta")) f.meta = j["meta"];
  return f;
}

void write_filter_json(const std::string& path, const FilterFile& f) {
  write_text_file(path, filter_to_json(f).dump(2) + "\n");
}

FilterFile read_filter_json(const std::string& path) {
  try {
    return filter_from_json(Json::parse(read_text_file(path)));
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

void write_filter_csv(const std::string& path, const FirFilter& filter) {
  std::string out = "n,c_n\n";
  for (std::size_t n = 1; n <= filter.order(); ++n)
    out += std::to_string(n) + "," + format_double(filter.tap(n)) + "\n";
  write_text_file(path, out);
}

FirFilter read_filter_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("n,c_n", 0) != 0)
    throw std::invalid_argument(path + ": expected header 'n,c_n'");
  std::vector<double> taps;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::invalid_argument(path + ": malformed row '" + line + "'");
    const long n = std::stol(line.substr(0, comma));
    if (n != static_cast<long>(taps.size()) + 1)
      throw std::invalid_argument(path + ": tap indices must run 1, 2, ..., p");
    taps.push_back(std::stod(line.substr(comma + 1)));
  }
  return FirFilter(std::move(taps));
}

FilterFile read_filter(const std::string& path) {
  if (fs::path(path).extension() == ".csv") return FilterFile{read_filter_csv(path), std::nullopt, Json::object()};
  return read_filter_json(path);
}

Json rate_point_to_json(const RatePoint& p) {
  Json j;
  j["architecture"] = std::string(to_string(p.architecture));
  j["distortion"] = p.distortion;
  j["rate_bits"] = p.mutual_info_bits;
  return j;
}

// ---------------------------------------------------------------------------

namespace {

double require_number(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number())
    throw std::invalid_argument(std::string("sim config: missing numeric field '") + key + "'");
  return j[key].get<double>();
}

std::size_t require_count(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<long long>() < 0)
    throw std::invalid_argument(std::string("sim config: field '") + key + "' must be a nonnegative integer");
  return j[key].get<std::size_t>();
}

std::string resolve(const std::string& base_dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? p : (fs::path(base_dir) / path).string();
}

// The noise variance may be given directly, as a target distortion (through
// the sigma-delta mapping sigma2 = D / band_energy), or, for the dithered
// quantizer, as an excess rate delta = R - I.
double resolve_noise_variance(const Json& noise, const BandSpec& spec, const FirFilter& filter) {
  const int given = static_cast<int>(noise.contains("sigma2")) +
                    static_cast<int>(noise.contains("distortion")) +
                    static_cast<int>(noise.contains("excess_rate"));
  if (given != 1)
    throw std::invalid_argument("sim config: noise needs exactly one of sigma2, distortion, excess_rate");
  if (noise.contains("sigma2")) return require_number(noise, "sigma2");
  if (noise.contains("distortion")) return require_number(noise, "distortion") / band_energy(filter, spec.oversampling());
  if (!noise.contains("rate_bits"))
    throw std::invalid_argument("sim config: excess_rate requires rate_bits");
  const double target_i = require_number(noise, "rate_bits") - require_number(noise, "excess_rate");
  const double denom = std::exp2(2.0 * target_i) - 1.0 - total_energy(filter);
  if (!(denom > 0.0))
    throw std::invalid_argument("sim config: excess_rate leaves no room for the source at this rate");
  return spec.sigma2_x() / denom;
}

}  // namespace

SimConfig sim_config_from_json(const Json& j, const std::string& base_dir) {
  if (!j.is_object()) throw std::invalid_argument("sim config: expected a JSON object");
  if (!j.contains("seed") || !j["seed"].is_number_integer())
    throw std::invalid_argument("sim config: 'seed' is mandatory and must be an integer");

  SimConfig cfg;
  cfg.spec = BandSpec(require_number(j, "L"), require_number(j, "sigma2x"));
  cfg.seed = j["seed"].get<std::uint64_t>();
  cfg.block_len = require_count(j, "block_len");
  cfg.num_blocks = require_count(j, "num_blocks");

  if (j.contains("filter") && j.contains("filter_file"))
    throw std::invalid_argument("sim config: give either 'filter' or 'filter_file', not both");
  if (j.contains("filter")) {
    cfg.filter = filter_from_json(j["filter"]).filter;
  } else if (j.contains("filter_file")) {
    cfg.filter = read_filter(resolve(base_dir, j["filter_file"].get<std::string>())).filter;
  }

  if (!j.contains("noise") || !j["noise"].is_object())
    throw std::invalid_argument("sim config: missing 'noise' object");
  const Json& noise = j["noise"];
  const std::string model = noise.value("model", "");
  const double sigma2 = resolve_noise_variance(noise, cfg.spec, cfg.filter);
  if (model == "awgn") {
    cfg.noise = AwgnNoise{sigma2};
  } else if (model == "dithered") {
    const double r = require_number(noise, "rate_bits");
    if (r != std::floor(r) || r < 1.0)
      throw std::invalid_argument("sim config: rate_bits must be a positive integer");
    cfg.noise = DitheredQuantizer{QuantizerSpec(static_cast<int>(r), sigma2)};
  } else {
    throw std::invalid_argument("sim config: noise.model must be 'awgn' or 'dithered'");
  }

  if (j.contains("source_shape")) {
    const Json& shape = j["source_shape"];
    if (shape.is_string()) {
      cfg.source_label = shape.get<std::string>();
      if (cfg.source_label != "flat") cfg.source_shape = make_source_shape(cfg.source_label, cfg.spec);
    } else if (shape.is_object() && shape.contains("psd_file")) {
      cfg.source_label = "custom";
      cfg.source_shape = Psd(read_grid_csv(resolve(base_dir, shape["psd_file"].get<std::string>())));
    } else {
      throw std::invalid_argument("sim config: source_shape must be a name or {\"psd_file\": ...}");
    }
  }
  if (j.contains("guard") && !j["guard"].is_null()) cfg.guard = require_count(j, "guard");
  if (j.contains("threads")) cfg.threads = static_cast<unsigned>(require_count(j, "threads"));
  validate(cfg);
  return cfg;
}

SimConfig read_sim_config(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return sim_config_from_json(j, fs::path(path).parent_path().string().empty()
                                     ? "."
                                     : fs::path(path).parent_path().string());
}

Json sim_config_to_json(const SimConfig& cfg) {
  Json j;
  j["L"] = cfg.spec.oversampling();
  j["sigma2x"] = cfg.spec.sigma2_x();
  j["filter"] = filter_to_json(FilterFile{cfg.filter, std::nullopt, Json::object()});
  Json noise;
  if (const auto* awgn = std::get_if<AwgnNoise>(&cfg.noise)) {
    noise["model"] = "awgn";
    noise["sigma2"] = awgn->sigma2;
  } else {
    const auto& q = std::get<DitheredQuantizer>(cfg.noise).quantizer;
    noise["model"] = "dithered";
    noise["rate_bits"] = q.rate_bits();
    noise["sigma2"] = q.sigma2();
  }
  j["noise"] = noise;
  j["block_len"] = cfg.block_len;
  j["num_blocks"] = cfg.num_blocks;
  j["seed"] = cfg.seed;
  j["source_shape"] = cfg.source_label;
  j["guard"] = cfg.guard.value_or(cfg.filter.order());
  return j;
}

namespace {

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json estimate_to_json(const Estimate& e) {
  Json j;
  j["mean"] = number_or_null(e.mean);
  j["stderr"] = number_or_null(e.std_error);
  j["count"] = e.count;
  return j;
}

}  // namespace

Json sim_report_to_json(const SimReport& r) {
  Json j;
  j["mse_conditional"] = estimate_to_json(r.mse_conditional);
  j["mse_all"] = estimate_to_json(r.mse_all);
  j["mse_full_block"] = estimate_to_json(r.mse_full_block);
  j["var_u"] = estimate_to_json(r.var_u);
  j["overload_block_rate"] = estimate_to_json(r.overload_block_rate);
  j["overload_sample_rate"] = estimate_to_json(r.overload_sample_rate);
  j["overloaded_blocks"] = r.overloaded_blocks;
  j["overloaded_samples"] = r.overloaded_samples;
  j["analytic_d"] = r.analytic_d;
  j["analytic_rate_bits"] = r.analytic_rate_bits;
  j["analytic_var_u"] = r.analytic_var_u;
  j["bound_pol"] = r.bound_pol ? Json(*r.bound_pol) : Json(nullptr);
  j["excess_rate"] = r.excess_rate ? Json(*r.excess_rate) : Json(nullptr);
  return j;
}

void write_trace_csv(const std::string& path, const LoopTrace& t) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "n,x,u,nq,xhat,overload\n";
  for (std::size_t n = 0; n < t.x.size(); ++n) {
    out << n << ',' << format_double(t.x[n]) << ',' << format_double(t.u[n]) << ','
        << format_double(t.n_err[n]) << ',' << format_double(t.xhat[n]) << ','
        << static_cast<int>(t.overload[n]) << '\n';
  }
}

}  // namespace sigdelta::io
