#pragma once

// File formats: filter JSON / CSV, SimConfig and SimReport JSON, RatePoint
// JSON and the per-sample trace CSV.

#include <optional>
#include <string>

#include <json.hpp>

#include "sigdelta/channels.hpp"
#include "sigdelta/simulate.hpp"
#include "sigdelta/spectra.hpp"

namespace sigdelta::io {

using Json = nlohmann::ordered_json;

struct FilterFile {
  FirFilter filter;
  std::optional<double> oversampling;
  Json meta = Json::object();
};

/// `{ "taps": [c1, ..., cp], "L": ..., "meta": {...} }`
Json filter_to_json(const FilterFile& f);
FilterFile filter_from_json(const Json& j);
void write_filter_json(const std::string& path, const FilterFile& f);
FilterFile read_filter_json(const std::string& path);

/// `n,c_n` rows, n = 1..p.
void write_filter_csv(const std::string& path, const FirFilter& filter);
FirFilter read_filter_csv(const std::string& path);

/// Reads JSON or CSV by extension.
FilterFile read_filter(const std::string& path);

/// `{ "architecture": "...", "distortion": x, "rate_bits": y }`
Json rate_point_to_json(const RatePoint& p);

/// Relative paths inside the config (filter_file, psd_file) resolve against
/// `base_dir`.
SimConfig sim_config_from_json(const Json& j, const std::string& base_dir = ".");
SimConfig read_sim_config(const std::string& path);
Json sim_config_to_json(const SimConfig& cfg);

Json sim_report_to_json(const SimReport& r);

/// `n,x,u,nq,xhat,overload`
void write_trace_csv(const std::string& path, const LoopTrace& t);

/// Shortest round-trippable decimal form (%.17g).
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace sigdelta::io
