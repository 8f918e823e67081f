#include "spinsim/estimators.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "spinsim/constants.hpp"
#include "spinsim/errors.hpp"

namespace spinsim {
namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw ValidationError(std::string("non-finite ") + what);
}

}  // namespace

double GeometryParams::r12() const { return std::sqrt(x12 * x12 + y12 * y12 + z12 * z12); }

ZfsEstimate estimate_zfs(const GeometryParams& geom, double g) {
  require_finite(geom.x12, "x12");
  require_finite(geom.y12, "y12");
  require_finite(geom.z12, "z12");
  const double r_a = geom.r12();
  if (!(r_a > 0.0)) throw ValidationError("electron-pair separation r12 must be positive");

  using namespace constants;
  const double x = geom.x12 * kAngstrom;
  const double y = geom.y12 * kAngstrom;
  const double z = geom.z12 * kAngstrom;
  const double r = r_a * kAngstrom;
  const double prefactor = 1.5 * kMu0Over4Pi * g * g * kBohrMagneton * kBohrMagneton;
  const double d_joule = prefactor * (1.0 - 3.0 * x * x / (r * r)) / (r * r * r);
  const double e_joule = prefactor * (z * z - y * y) / std::pow(r, 5);
  return {d_joule / kPlanck * 1.0e-9, e_joule / kPlanck * 1.0e-9};
}

void OrbitalComposition::validate() const {
  require_finite(cs2, "cs2");
  require_finite(cp2, "cp2");
  require_finite(eta, "eta");
  if (cs2 < 0.0 || cs2 > 1.0 || cp2 < 0.0 || cp2 > 1.0) throw ValidationError("orbital weights must lie in [0, 1]");
  if (std::abs(cs2 + cp2 - 1.0) > 1e-12) throw ValidationError("orbital weights must sum to 1");
  if (eta <= 0.0 || eta > 1.0) throw ValidationError("spin-density fraction eta must lie in (0, 1]");
}

OrbitalComposition parse_orbital(std::string_view name, double eta) {
  OrbitalComposition out;
  if (name == "pi") {
    out = OrbitalComposition::pi(eta);
  } else if (name == "sigma") {
    out = OrbitalComposition::sigma(eta);
  } else {
    throw ValidationError("orbital must be 'pi' or 'sigma', got '" + std::string(name) + "'");
  }
  out.validate();
  return out;
}

void NuclearSpecies::validate() const {
  if (label.empty()) throw ValidationError("nuclear species needs a label");
  for (double v : {g_n, phi_s0_sq, inv_r3})
    if (!std::isfinite(v) || v <= 0.0) throw ValidationError("atomic parameters for " + label + " must be positive");
}

HyperfineEstimate hyperfine(const NuclearSpecies& species, const OrbitalComposition& orbital, double g) {
  species.validate();
  orbital.validate();
  using namespace constants;
  const double coupling = kMu0Over4Pi * g * kBohrMagneton * species.g_n * kNuclearMagneton * orbital.eta;
  const double to_mhz = 1.0 / kPlanck * 1.0e-6;
  HyperfineEstimate out;
  out.f_mhz = (8.0 * std::numbers::pi / 3.0) * coupling * orbital.cs2 * species.phi_s0_sq * to_mhz;
  out.d_mhz = 0.4 * coupling * orbital.cp2 * species.inv_r3 * to_mhz;
  out.a_par_mhz = out.f_mhz + out.d_mhz;
  out.a_perp_mhz = out.f_mhz - 2.0 * out.d_mhz;
  return out;
}

std::vector<NuclearSpecies> default_atomic_table() {
  // Matches data/atomic_parameters.json.
  return {
      {"B11", 1.7924326, 1.1991197027e31, 6.2741368336e30},
      {"N14", 0.403761, 3.7884972717e31, 2.4349504542e31},
  };
}

std::vector<NuclearSpecies> load_atomic_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open atomic table " + path.string());
  std::vector<NuclearSpecies> table;
  try {
    const nlohmann::json doc = nlohmann::json::parse(in);
    for (const auto& item : doc.at("species")) {
      NuclearSpecies s;
      s.label = item.at("label").get<std::string>();
      s.g_n = item.at("g_n").get<double>();
      s.phi_s0_sq = item.at("phi_s0_sq_m3").get<double>();
      s.inv_r3 = item.at("inv_r3_m3").get<double>();
      s.validate();
      table.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed atomic table " + path.string() + ": " + e.what());
  }
  if (table.empty()) throw ValidationError("atomic table " + path.string() + " lists no species");
  return table;
}

const NuclearSpecies& find_species(const std::vector<NuclearSpecies>& table, std::string_view label) {
  for (const NuclearSpecies& s : table)
    if (s.label == label) return s;
  throw ValidationError("unknown nuclear species '" + std::string(label) + "'");
}

}  // namespace spinsim
