#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>
#include <stdexcept>

#ifndef SIGDELTA_VERSION
#define SIGDELTA_VERSION "unknown"
#endif

namespace sigdelta::cli {

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 init failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::string hex;
  char byte[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

Manifest::Manifest(std::string command, std::vector<std::string> argv)
    : command_(std::move(command)), argv_(std::move(argv)) {}

void Manifest::add_input(const std::string& path) { inputs_.emplace_back(path, sha256_file(path)); }
void Manifest::add_output(const std::string& path) { outputs_.emplace_back(path, sha256_file(path)); }

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

io::Json digests(const std::vector<std::pair<std::string, std::string>>& files) {
  io::Json out = io::Json::array();
  for (const auto& [path, hash] : files) out.push_back({{"path", path}, {"sha256", hash}});
  return out;
}

}  // namespace

io::Json Manifest::to_json() const {
  io::Json j;
  j["command"] = command_;
  j["argv"] = argv_;
  j["tool_version"] = SIGDELTA_VERSION;
  j["seed"] = has_seed_ ? io::Json(seed_) : io::Json(nullptr);
  j["parameters"] = params_;
  j["inputs"] = digests(inputs_);
  j["outputs"] = digests(outputs_);
  j["timestamp"] = utc_timestamp();
  return j;
}

void Manifest::write(const std::string& path) const {
  io::write_text_file(path, to_json().dump(2) + "\n");
}

std::string manifest_path_for(const std::string& output) { return output + ".manifest.json"; }

}  // namespace sigdelta::cli
