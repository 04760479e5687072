#include "manifest.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <fstream>

#include "termset/error.hpp"

namespace termset::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw InvariantError("sha256 initialisation failed");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

Manifest::Manifest(std::string command, std::vector<std::string> args)
    : command_(std::move(command)), args_(std::move(args)) {}

void Manifest::set_config(const KeyValueConfig& config) {
  config_ = nlohmann::ordered_json::object();
  for (const auto& [key, value] : config.values()) config_[key] = value;
}

void Manifest::add_seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }

void Manifest::add_input(const std::filesystem::path& path) {
  inputs_.push_back({{"path", std::filesystem::absolute(path).lexically_normal().string()},
                     {"sha256", sha256_file(path)}});
}

void Manifest::add_output(const std::filesystem::path& path) {
  outputs_.push_back({{"path", std::filesystem::absolute(path).lexically_normal().string()},
                      {"name", path.filename().string()},
                      {"sha256", sha256_file(path)}});
}

void Manifest::write(const std::filesystem::path& path, double wall_seconds) const {
  nlohmann::ordered_json m;
  m["tool"] = "termset";
  m["manifest_version"] = 1;
  m["command"] = command_;
  m["args"] = args_;
  m["cwd"] = std::filesystem::current_path().string();
  m["config"] = config_;
  m["seeds"] = seeds_;
  m["deterministic"] = deterministic_;
  m["inputs"] = inputs_;
  m["outputs"] = outputs_;
  m["wall_time_s"] = wall_seconds;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << m.dump(2) << '\n';
}

}  // namespace termset::cli
