#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace spinsim::cli {

// Provenance record written next to every file output.
class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> arguments);

  void set_config(const RunConfig& config);
  void set_parameters(nlohmann::ordered_json parameters) { parameters_ = std::move(parameters); }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  // Writes `content` to `path` (stdout when empty) and records it.
  void emit(const std::string& path, const std::string& content);

  // Hash of the canonical config and command parameters.
  std::string config_hash() const;
  nlohmann::ordered_json to_json() const;

  // Manifest goes to `path`, or next to the first file output when empty.
  void finish(const std::optional<std::string>& path) const;

 private:
  struct Output {
    std::string path;
    std::size_t bytes;
    std::string fnv1a64;
  };

  nlohmann::ordered_json inputs() const;

  std::string command_;
  std::vector<std::string> arguments_;
  std::optional<nlohmann::ordered_json> config_;
  nlohmann::ordered_json parameters_ = nlohmann::ordered_json::object();
  std::optional<std::uint64_t> seed_;
  std::vector<Output> outputs_;
  std::chrono::system_clock::time_point started_;
};

std::string utc_timestamp(std::chrono::system_clock::time_point t);

}  // namespace spinsim::cli
