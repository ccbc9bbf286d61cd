#include "manifest.hpp"

#include <sys/resource.h>

#include <array>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "pvcm/error.hpp"
#include "pvcm/version.hpp"

namespace pvcm::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return hex.str();
}

long peak_rss_kib() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return usage.ru_maxrss;
}

Manifest::Manifest(std::string subcommand, std::vector<std::string> arguments)
    : start_(std::chrono::steady_clock::now()) {
  doc_["tool"] = "pvcm";
  doc_["version"] = std::string(kVersion);
  doc_["subcommand"] = std::move(subcommand);
  doc_["arguments"] = std::move(arguments);
  doc_["options"] = nlohmann::ordered_json::object();
  doc_["inputs"] = nlohmann::ordered_json::array();
}

void Manifest::add_input(const std::string& role, const std::filesystem::path& path) {
  doc_["inputs"].push_back({{"role", role}, {"path", path.string()}, {"sha256", sha256_file(path)}});
}

void Manifest::write(const std::filesystem::path& dir, int threads) const {
  write_json(dir / "manifest.json", doc_);
  nlohmann::ordered_json timing;
  timing["wall_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  timing["peak_rss_kib"] = peak_rss_kib();
  timing["threads"] = threads;
  write_json(dir / "timing.json", timing);
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace pvcm::cli
