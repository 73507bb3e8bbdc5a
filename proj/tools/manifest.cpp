#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <ctime>
#include <fstream>
#include <memory>

#include "rvae/csv.hpp"
#include "rvae/error.hpp"

#ifndef RVAE_VERSION
#define RVAE_VERSION "0.0.0"
#endif

namespace rvae::cli {

namespace {

struct DigestCtx {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};

  DigestCtx() {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("sha256: digest init failed");
    }
  }
  void update(const char* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx.get(), data, n) != 1) throw std::runtime_error("sha256: update failed");
  }
  std::string finish() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) throw std::runtime_error("sha256: final failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(kHex[md[i] >> 4]);
      out.push_back(kHex[md[i] & 0xF]);
    }
    return out;
  }
};

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::ordered_json file_entry(const std::filesystem::path& p) {
  nlohmann::ordered_json j;
  j["path"] = p.generic_string();
  j["bytes"] = std::filesystem::file_size(p);
  j["sha256"] = sha256_file(p);
  return j;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  DigestCtx d;
  d.update(bytes.data(), bytes.size());
  return d.finish();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path.string() + "' for hashing");
  DigestCtx d;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return d.finish();
}

RunManifest::RunManifest(std::string command, std::uint64_t seed)
    : command_(std::move(command)),
      seed_(seed),
      started_(std::chrono::system_clock::now()),
      started_mono_(std::chrono::steady_clock::now()) {}

void RunManifest::add_input(const std::filesystem::path& path) { inputs_.push_back(path); }
void RunManifest::add_artifact(const std::filesystem::path& path) { artifacts_.push_back(path); }

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "rvae-run-manifest";
  j["version"] = RVAE_VERSION;
  j["command"] = command_;
  j["seed"] = seed_;
  j["config"] = config_;
  j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& p : inputs_) j["inputs"].push_back(file_entry(p));
  j["artifacts"] = nlohmann::ordered_json::array();
  for (const auto& p : artifacts_) j["artifacts"].push_back(file_entry(p));
  for (const auto& [k, v] : extra_.items()) j[k] = v;
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started_mono_).count();
  j["wall_clock"] = {{"started_utc", utc_timestamp(started_)}, {"elapsed_s", elapsed}};
  return j;
}

void RunManifest::write(const std::filesystem::path& dir) const {
  csv::write_text(dir / "manifest.json", to_json().dump(2) + "\n");
}

}  // namespace rvae::cli
