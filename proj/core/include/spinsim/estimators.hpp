#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace spinsim {

// Electron-pair displacement in angstrom.
struct GeometryParams {
  double x12 = 0.0;
  double y12 = 0.0;
  double z12 = 0.0;

  double r12() const;
};

struct ZfsEstimate {
  double d_ghz = 0.0;
  double e_ghz = 0.0;
};

// Point dipolar estimate of D and E for one electron-pair configuration.
ZfsEstimate estimate_zfs(const GeometryParams& geom, double g = 2.0);

// psi = c_s phi_s + c_p phi_p carrying a fraction eta of the spin density.
struct OrbitalComposition {
  double cs2 = 0.0;
  double cp2 = 1.0;
  double eta = 1.0;

  static OrbitalComposition pi(double eta = 1.0) { return {0.0, 1.0, eta}; }
  static OrbitalComposition sigma(double eta = 1.0) { return {1.0 / 3.0, 2.0 / 3.0, eta}; }  // sp2
  void validate() const;
};

OrbitalComposition parse_orbital(std::string_view name, double eta);

struct NuclearSpecies {
  std::string label;
  double g_n = 0.0;
  double phi_s0_sq = 0.0;  // |phi_s(0)|^2, m^-3
  double inv_r3 = 0.0;     // <phi_p| r^-3 |phi_p>, m^-3

  void validate() const;
};

struct HyperfineEstimate {
  double f_mhz = 0.0;       // Fermi contact
  double d_mhz = 0.0;       // dipolar
  double a_par_mhz = 0.0;   // f + d
  double a_perp_mhz = 0.0;  // f - 2d
};

HyperfineEstimate hyperfine(const NuclearSpecies& species, const OrbitalComposition& orbital, double g = 2.0);

// Built-in table (11B and 14N).
std::vector<NuclearSpecies> default_atomic_table();
// JSON table {"species": [{"label", "g_n", "phi_s0_sq_m3", "inv_r3_m3"}, ...]}.
std::vector<NuclearSpecies> load_atomic_table(const std::filesystem::path& path);
const NuclearSpecies& find_species(const std::vector<NuclearSpecies>& table, std::string_view label);

}  // namespace spinsim
