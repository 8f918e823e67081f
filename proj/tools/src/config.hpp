#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "spinsim/dynamics.hpp"

namespace spinsim::cli {

// Model configuration shared by the simulation subcommands.
struct RunConfig {
  std::string diagram = "singlet-b";
  double e_over_d = -0.33;
  RateParameters params;
  std::uint64_t seed = 1;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Individual command-line overrides; unset fields keep the config value.
struct ConfigOverrides {
  std::optional<std::string> diagram;
  std::optional<double> e_over_d, t1_us, gamma_s_mhz, gamma_e_mhz, gamma_isc1_mhz, gamma_isc2_mhz, epsilon;
  std::optional<std::uint64_t> seed;
};

// Reference parameters for the diagram's ground-state spin.
RunConfig default_config(const std::string& diagram);

// Keys missing from the document fall back to default_config(diagram).
RunConfig parse_config(const nlohmann::ordered_json& doc);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

nlohmann::ordered_json to_json(const RunConfig& config);
std::string serialize_config(const RunConfig& config);

RunConfig resolve_config(const std::optional<std::string>& path, const ConfigOverrides& overrides);

// Throws ValidationError for unknown diagrams or invalid rates.
void validate(const RunConfig& config);

}  // namespace spinsim::cli
