#include "config.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "spinsim/errors.hpp"
#include "spinsim/symmetry.hpp"

namespace spinsim::cli {
namespace {

constexpr std::array<std::string_view, 9> kKeys{
    "diagram",        "e_over_d",       "t1_us",   "gamma_s_mhz", "gamma_e_mhz",
    "gamma_isc1_mhz", "gamma_isc2_mhz", "epsilon", "seed"};

double number(const nlohmann::ordered_json& doc, const char* key, double fallback) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (!v.is_number()) throw ValidationError(std::string("config key '") + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

RunConfig default_config(const std::string& diagram) {
  const LevelDiagram d = find_diagram(diagram);
  const ModelPreset preset = d.ground == GroundSpin::Singlet ? singlet_ground_preset() : triplet_ground_preset();
  RunConfig c;
  c.diagram = d.id;
  c.e_over_d = preset.e_over_d;
  c.params = preset.params;
  return c;
}

RunConfig parse_config(const nlohmann::ordered_json& doc) {
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    bool known = false;
    for (auto k : kKeys) known = known || key == k;
    if (!known) throw ValidationError("unknown config key '" + key + "'");
  }
  std::string diagram = "singlet-b";
  if (doc.contains("diagram")) {
    if (!doc.at("diagram").is_string()) throw ValidationError("config key 'diagram' must be a string");
    diagram = doc.at("diagram").get<std::string>();
  }
  RunConfig c = default_config(diagram);
  c.e_over_d = number(doc, "e_over_d", c.e_over_d);
  c.params.t1_us = number(doc, "t1_us", c.params.t1_us);
  c.params.gamma_s_mhz = number(doc, "gamma_s_mhz", c.params.gamma_s_mhz);
  c.params.gamma_e_mhz = number(doc, "gamma_e_mhz", c.params.gamma_e_mhz);
  c.params.gamma_isc1_mhz = number(doc, "gamma_isc1_mhz", c.params.gamma_isc1_mhz);
  c.params.gamma_isc2_mhz = number(doc, "gamma_isc2_mhz", c.params.gamma_isc2_mhz);
  c.params.epsilon = number(doc, "epsilon", c.params.epsilon);
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) throw ValidationError("config key 'seed' must be a non-negative integer");
    c.seed = doc.at("seed").get<std::uint64_t>();
  }
  return c;
}

RunConfig parse_config_text(const std::string& text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json doc;
  doc["diagram"] = c.diagram;
  doc["e_over_d"] = c.e_over_d;
  doc["t1_us"] = c.params.t1_us;
  doc["gamma_s_mhz"] = c.params.gamma_s_mhz;
  doc["gamma_e_mhz"] = c.params.gamma_e_mhz;
  doc["gamma_isc1_mhz"] = c.params.gamma_isc1_mhz;
  doc["gamma_isc2_mhz"] = c.params.gamma_isc2_mhz;
  doc["epsilon"] = c.params.epsilon;
  doc["seed"] = c.seed;
  return doc;
}

std::string serialize_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

RunConfig resolve_config(const std::optional<std::string>& path, const ConfigOverrides& o) {
  RunConfig c = path ? load_config(*path) : default_config(o.diagram.value_or("singlet-b"));
  if (o.diagram && *o.diagram != c.diagram) {
    // Switching diagram keeps explicit config values.
    find_diagram(*o.diagram);
    c.diagram = *o.diagram;
  }
  if (o.e_over_d) c.e_over_d = *o.e_over_d;
  if (o.t1_us) c.params.t1_us = *o.t1_us;
  if (o.gamma_s_mhz) c.params.gamma_s_mhz = *o.gamma_s_mhz;
  if (o.gamma_e_mhz) c.params.gamma_e_mhz = *o.gamma_e_mhz;
  if (o.gamma_isc1_mhz) c.params.gamma_isc1_mhz = *o.gamma_isc1_mhz;
  if (o.gamma_isc2_mhz) c.params.gamma_isc2_mhz = *o.gamma_isc2_mhz;
  if (o.epsilon) c.params.epsilon = *o.epsilon;
  if (o.seed) c.seed = *o.seed;
  validate(c);
  return c;
}

void validate(const RunConfig& c) {
  find_diagram(c.diagram);
  c.params.validate();
  if (!std::isfinite(c.e_over_d) || std::abs(c.e_over_d) > 1.0 / 3.0 + 1e-12)
    throw ValidationError("e_over_d must lie in [-1/3, 1/3]");
}

}  // namespace spinsim::cli
