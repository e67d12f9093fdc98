#pragma once

#include <string>
#include <vector>

#include "sigdelta/io.hpp"

namespace sigdelta::cli {

std::string sha256_file(const std::string& path);

// Run record written next to every output. Everything except "timestamp"
// is a pure function of the command line and input files.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv);

  void set_seed(std::uint64_t seed) { seed_ = seed; has_seed_ = true; }
  io::Json& parameters() { return params_; }
  void add_input(const std::string& path);
  void add_output(const std::string& path);

  io::Json to_json() const;
  void write(const std::string& path) const;

 private:
  std::string command_;
  std::vector<std::string> argv_;
  io::Json params_ = io::Json::object();
  std::uint64_t seed_ = 0;
  bool has_seed_ = false;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::pair<std::string, std::string>> outputs_;
};

std::string manifest_path_for(const std::string& output);

}  // namespace sigdelta::cli
