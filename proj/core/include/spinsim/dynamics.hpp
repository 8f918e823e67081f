#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spinsim/spin_models.hpp"
#include "spinsim/symmetry.hpp"

namespace spinsim {

// Transition rates in MHz (events per microsecond); T1 in microseconds.
struct RateParameters {
  double gamma_e_mhz = 0.0;     // optical excitation
  double gamma_s_mhz = 0.0;     // radiative decay
  double gamma_isc1_mhz = 0.0;  // ES -> metastable
  double gamma_isc2_mhz = 0.0;  // metastable -> GS
  double t1_us = 0.0;           // metastable-triplet spin relaxation time
  double epsilon = 0.0;         // relaxation of spin-selective ISC

  // Saturation parameter x = Gamma_e / Gamma_s.
  double saturation() const { return gamma_e_mhz / gamma_s_mhz; }
  static RateParameters with_saturation(double x, double gamma_s_mhz, double gamma_isc1_mhz,
                                        double gamma_isc2_mhz, double t1_us, double epsilon);
  void validate() const;

  friend bool operator==(const RateParameters&, const RateParameters&) = default;
};

// Reference parameter sets used for the simulated PL maps and g2 sweeps.
struct ModelPreset {
  std::string diagram_id;
  RateParameters params;
  double e_over_d;
};
ModelPreset singlet_ground_preset();  // singlet-GS diagram (b)
ModelPreset triplet_ground_preset();  // triplet-GS diagram (e)

enum class StateKind { Ground, Excited, Metastable };

// Edge `from` -> `to` of the generator.
struct Transition {
  std::size_t to;
  std::size_t from;
};

// Generator of dx/dt = R x; R(i, j) is the rate from state j into state i.
struct RateMatrix {
  Eigen::MatrixXd rates;
  std::vector<std::string> labels;
  std::vector<StateKind> kinds;
  std::vector<Transition> radiative;       // photon-emitting edges (GS <- ES)
  std::vector<std::size_t> spin_sublevels;  // triplet eigenstates mixed by T1 / ODMR

  std::size_t size() const { return static_cast<std::size_t>(rates.rows()); }
  // Throws ValidationError unless off-diagonals are >= 0 and columns sum to 0.
  void validate() const;
};

using PopulationVector = Eigen::VectorXd;

// Coupling coefficients m_i = sum_mu p_mu |<s_mu|s_i>|^2.
Eigen::Vector3d coupling_coefficients(const SelectionVector& p, const SpinEigensystem& eig);

RateMatrix build_rate_matrix(const LevelDiagram& diagram, const RateParameters& params,
                             const SpinEigensystem& eig);

// Adds a symmetric incoherent mixing rate between states i and j (0-based).
RateMatrix with_spin_mixing(RateMatrix r, std::size_t i, std::size_t j, double rate_mhz);

PopulationVector steady_state(const RateMatrix& r);
double steady_pl(const RateMatrix& r, const PopulationVector& x);
double metastable_population(const RateMatrix& r, const PopulationVector& x);
// Population right after a photon is emitted, given steady state x.
PopulationVector post_emission_state(const RateMatrix& r, const PopulationVector& x);

struct G2Curve {
  std::vector<double> delays_s;
  std::vector<double> values;
};

enum class G2Method { Auto, Eigen, RungeKutta };
enum class G2Start { PostEmission, SteadyState };

struct G2Options {
  G2Method method = G2Method::Auto;
  G2Start start = G2Start::PostEmission;
  double rk_relative_tolerance = 1e-11;
  double rk_absolute_tolerance = 1e-15;
};

// Propagates populations with the eigen-decomposition of R.
class EigenPropagator {
 public:
  explicit EigenPropagator(const RateMatrix& r, const PopulationVector& x0);
  // Reconstruction error ||V L V^-1 - R|| / ||R||.
  double reconstruction_error() const { return reconstruction_error_; }
  PopulationVector at(double t_us) const;

 private:
  Eigen::VectorXcd eigenvalues_;
  Eigen::MatrixXcd eigenvectors_;
  Eigen::VectorXcd coefficients_;
  double reconstruction_error_ = 0.0;
};

// Adaptive RK4 (step doubling) evaluated at increasing times in microseconds.
std::vector<PopulationVector> integrate_rk4(const RateMatrix& r, const PopulationVector& x0,
                                            std::span<const double> times_us,
                                            double relative_tolerance = 1e-11,
                                            double absolute_tolerance = 1e-15);

G2Curve simulate_g2(const RateMatrix& r, std::span<const double> delays_s,
                    const G2Options& options = {});
G2Curve simulate_g2(const LevelDiagram& diagram, const RateParameters& params,
                    const SpinEigensystem& eig, std::span<const double> delays_s,
                    const G2Options& options = {});

// Log-uniform delays from t_min to t_max inclusive.
std::vector<double> log_delays(double t_min_s, double t_max_s, int points_per_decade);

double pl_variation(double pl_b, double pl_0);

// (I_MR - I_0)/I_0 when eigenstates `pair` (1-based state numbers in the
// rate matrix, e.g. {3, 4}) are mixed at rate gamma_odmr_mhz.
double odmr_pl_variation(const LevelDiagram& diagram, const RateParameters& params,
                         const SpinEigensystem& eig, std::pair<int, int> pair,
                         double gamma_odmr_mhz);

// Lifetime-limited ODMR linewidth Gamma_ISC2 / 2 pi, in kHz.
double odmr_linewidth_floor_khz(const RateParameters& params);

}  // namespace spinsim
