#include "manifest.hpp"

#include <ctime>

#include "output.hpp"

namespace spinsim::cli {

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t secs = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest::RunManifest(std::string command, std::vector<std::string> arguments)
    : command_(std::move(command)), arguments_(std::move(arguments)), started_(std::chrono::system_clock::now()) {}

void RunManifest::set_config(const RunConfig& config) {
  config_ = cli::to_json(config);
  seed_ = config.seed;
}

void RunManifest::emit(const std::string& path, const std::string& content) {
  write_output(path, content);
  if (path.empty() || path == "-") return;
  outputs_.push_back({path, content.size(), hex64(fnv1a64(content))});
}

nlohmann::ordered_json RunManifest::inputs() const {
  nlohmann::ordered_json doc;
  doc["command"] = command_;
  if (config_) doc["config"] = *config_;
  doc["parameters"] = parameters_;
  return doc;
}

std::string RunManifest::config_hash() const { return hex64(fnv1a64(inputs().dump())); }

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json doc;
  doc["tool"] = "spinsim";
  doc["version"] = SPINSIM_VERSION;
  doc["command"] = command_;
  doc["arguments"] = arguments_;
  doc["config_hash"] = config_hash();
  doc["seed"] = seed_ ? nlohmann::ordered_json(*seed_) : nlohmann::ordered_json(nullptr);
  if (config_) doc["config"] = *config_;
  doc["parameters"] = parameters_;
  doc["started_utc"] = utc_timestamp(started_);
  doc["finished_utc"] = utc_timestamp(std::chrono::system_clock::now());
  auto outputs = nlohmann::ordered_json::array();
  for (const auto& o : outputs_)
    outputs.push_back({{"path", o.path}, {"bytes", o.bytes}, {"fnv1a64", o.fnv1a64}});
  doc["outputs"] = outputs;
  return doc;
}

void RunManifest::finish(const std::optional<std::string>& path) const {
  std::string target;
  if (path) {
    target = *path;
  } else if (!outputs_.empty()) {
    target = outputs_.front().path + ".manifest.json";
  } else {
    return;
  }
  write_output(target, to_json().dump(2) + "\n");
}

}  // namespace spinsim::cli
