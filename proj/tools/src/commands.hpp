#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "spinsim/dynamics.hpp"
#include "spinsim/photonstats.hpp"

namespace spinsim::cli {

// --threads, then SPINSIM_THREADS, then 1.
std::size_t resolve_threads(std::optional<long long> flag);

// Field sweeps. Fields are in units of D / (g mu_B).
struct PlMapOptions {
  enum class Mode { Map, Phi, Magnitude };
  Mode mode = Mode::Map;
  double b_max = 2.0;    // map, magnitude
  int grid = 21;         // map: odd so that B = 0 is sampled
  double b = 0.5;        // phi
  int points = 360;      // phi, magnitude
  double phi_deg = 0.0;  // magnitude (in-plane)
  bool along_z = false;  // magnitude sweep along z instead of in-plane
  double bz = 0.0;       // constant out-of-plane component for map / phi
  std::size_t threads = 1;
};

struct SteadyPoint {
  double bx = 0.0, by = 0.0, bz = 0.0;
  double pl = 0.0, pl_variation = 0.0, metastable_population = 0.0;
};

std::vector<SteadyPoint> pl_sweep(const RunConfig& config, const PlMapOptions& options);
std::string pl_map_csv(const RunConfig& config, const PlMapOptions& options);

struct G2SimOptions {
  double b = 0.5;
  double bz = 0.0;
  std::vector<double> phi_deg;  // empty: `n_phi` angles on [0, 180)
  int n_phi = 16;
  double t_min_s = 1e-10;
  double t_max_s = 1e-2;
  int points_per_decade = 20;
  G2Start start = G2Start::PostEmission;
  bool fit = true;
  int order = 2;
  std::size_t threads = 1;
};

struct G2SweepRow {
  double phi_deg = 0.0;
  double pl = 0.0;
  G2Curve curve;
  std::optional<EmpiricalFit> fit;
};

std::vector<double> sweep_angles_deg(const G2SimOptions& options);
std::vector<G2SweepRow> g2_sweep(const RunConfig& config, const G2SimOptions& options);
std::string g2_curves_csv(const std::vector<G2SweepRow>& rows);
std::string g2_fits_csv(const std::vector<G2SweepRow>& rows, int order);

struct G2FitOptions {
  FitOptions fit;
  std::optional<double> short_delay_s;   // fit the short-delay form on t <= this
  std::optional<double> background_rho;  // correct the curve before fitting
};

// Reads `t_s,g2,sigma`.
FitData read_histogram_csv(const std::string& text);
std::string histogram_csv(const G2Histogram& h);
nlohmann::ordered_json fit_report(const FitData& data, const G2FitOptions& options);

struct CorrelateOptions {
  Binning binning = Binning::log(10);
  DelayWindow window{1e-9, 1e-5};
  std::size_t threads = 1;
};

enum class TagFormat { Auto, Csv, Binary };
std::vector<TimeTag> read_tags_file(const std::string& path, TagFormat format);
std::string tags_bytes(const std::vector<TimeTag>& tags, TagFormat format);

nlohmann::ordered_json rates_report(double tau1_s, double tau2_s, double c2, double x);

struct OdmrOptions {
  std::pair<int, int> pair{3, 4};
  double gamma_odmr_mhz = 100.0;
  double b_max = 0.0;
  int grid = 1;
  double bz = 0.0;
  std::size_t threads = 1;
};

std::string odmr_map_csv(const RunConfig& config, const OdmrOptions& options);

std::string diagrams_csv();

}  // namespace spinsim::cli
