#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace pvcm::cli {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Peak resident set size of this process in KiB.
long peak_rss_kib();

/// Provenance record written next to every output. Timing goes to a
/// separate file so the manifest itself is reproducible byte for byte.
class Manifest {
 public:
  Manifest(std::string subcommand, std::vector<std::string> arguments);

  void add_input(const std::string& role, const std::filesystem::path& path);
  nlohmann::ordered_json& options() { return doc_["options"]; }
  nlohmann::ordered_json& extra(const std::string& key) { return doc_[key]; }

  /// Writes manifest.json and timing.json into dir.
  void write(const std::filesystem::path& dir, int threads) const;

 private:
  nlohmann::ordered_json doc_;
  std::chrono::steady_clock::time_point start_;
};

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc);

}  // namespace pvcm::cli
