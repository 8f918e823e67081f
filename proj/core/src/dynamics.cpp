#include "spinsim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include <Eigen/Eigenvalues>

#include "spinsim/constants.hpp"
#include "spinsim/errors.hpp"

namespace spinsim {
namespace {

void require_positive(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0) throw ValidationError(std::string(what) + " must be positive and finite");
}

double radiative_flux(const RateMatrix& r, const Eigen::Ref<const Eigen::VectorXd>& x) {
  double flux = 0.0;
  for (const Transition& t : r.radiative) flux += r.rates(t.to, t.from) * x(t.from);
  return flux;
}

void fill_diagonal(Eigen::MatrixXd& rates) {
  rates.diagonal().setZero();
  for (Eigen::Index j = 0; j < rates.cols(); ++j) rates(j, j) = -rates.col(j).sum();
}

}  // namespace

RateParameters RateParameters::with_saturation(double x, double gamma_s_mhz, double gamma_isc1_mhz,
                                               double gamma_isc2_mhz, double t1_us, double epsilon) {
  RateParameters p{x * gamma_s_mhz, gamma_s_mhz, gamma_isc1_mhz, gamma_isc2_mhz, t1_us, epsilon};
  p.validate();
  return p;
}

void RateParameters::validate() const {
  require_positive(gamma_e_mhz, "gamma_e");
  require_positive(gamma_s_mhz, "gamma_s");
  require_positive(gamma_isc1_mhz, "gamma_isc1");
  require_positive(gamma_isc2_mhz, "gamma_isc2");
  require_positive(t1_us, "T1");
  if (!std::isfinite(epsilon) || epsilon < 0.0 || epsilon > 0.5)
    throw ValidationError("epsilon must lie in [0, 1/2]");
}

ModelPreset singlet_ground_preset() {
  return {"singlet-b", RateParameters{82.0, 820.0, 7.7, 0.85, 50.0, 0.02}, -0.33};
}

ModelPreset triplet_ground_preset() {
  return {"triplet-e", RateParameters{82.0, 820.0, 33.0, 0.13, 50.0, 0.05}, -0.33};
}

void RateMatrix::validate() const {
  const Eigen::Index n = rates.rows();
  if (n == 0 || rates.cols() != n) throw ValidationError("rate matrix must be square and non-empty");
  if (!rates.allFinite()) throw ValidationError("rate matrix has non-finite entries");
  if (labels.size() != size() || kinds.size() != size())
    throw ValidationError("rate matrix labels do not match its dimension");
  const double scale = std::max(1.0, rates.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i)
      if (i != j && rates(i, j) < 0.0) throw ValidationError("rate matrix has a negative off-diagonal rate");
    if (std::abs(rates.col(j).sum()) > 1e-12 * scale)
      throw ValidationError("rate matrix column does not conserve probability");
  }
  for (const Transition& t : radiative)
    if (t.to >= size() || t.from >= size()) throw ValidationError("radiative edge out of range");
}

Eigen::Vector3d coupling_coefficients(const SelectionVector& p, const SpinEigensystem& eig) {
  if (eig.dimension() != 3) throw ValidationError("coupling coefficients need a triplet eigensystem");
  const Eigen::Vector3d weights(p[0], p[1], p[2]);
  return eig.projections.transpose() * weights;
}

RateMatrix build_rate_matrix(const LevelDiagram& diagram, const RateParameters& params,
                             const SpinEigensystem& eig) {
  params.validate();
  if (eig.dimension() != 3)
    throw ValidationError("rate matrix needs the 3-level metastable/ground triplet eigensystem");

  const Eigen::Vector3d upper = coupling_coefficients(diagram.m_prime.relaxed(params.epsilon), eig);
  const Eigen::Vector3d lower = coupling_coefficients(diagram.m.relaxed(params.epsilon), eig);
  if ((upper.array() < 0.0).any() || (lower.array() < 0.0).any())
    throw NumericalError("negative ISC coupling coefficient");

  const double mix = 1.0 / params.t1_us;
  RateMatrix r;
  if (diagram.ground == GroundSpin::Singlet) {
    // |1> GS, |2> ES, |3..5> metastable triplet eigenstates.
    r.rates = Eigen::MatrixXd::Zero(5, 5);
    r.labels = {"GS", "ES", "T1", "T2", "T3"};
    r.kinds = {StateKind::Ground, StateKind::Excited, StateKind::Metastable, StateKind::Metastable,
               StateKind::Metastable};
    r.rates(1, 0) = params.gamma_e_mhz;
    r.rates(0, 1) = params.gamma_s_mhz;
    for (Eigen::Index i = 0; i < 3; ++i) {
      r.rates(2 + i, 1) = upper(i) * params.gamma_isc1_mhz;
      r.rates(0, 2 + i) = lower(i) * params.gamma_isc2_mhz;
      for (Eigen::Index j = 0; j < 3; ++j)
        if (i != j) r.rates(2 + i, 2 + j) = mix;
    }
    r.radiative = {{0, 1}};
    r.spin_sublevels = {2, 3, 4};
  } else {
    // |1..3> ground triplet, |4..6> excited triplet, |7> metastable singlet.
    // Excitation and emission conserve the spin eigenstate.
    r.rates = Eigen::MatrixXd::Zero(7, 7);
    r.labels = {"G1", "G2", "G3", "E1", "E2", "E3", "S"};
    r.kinds = {StateKind::Ground,  StateKind::Ground,  StateKind::Ground,    StateKind::Excited,
               StateKind::Excited, StateKind::Excited, StateKind::Metastable};
    for (Eigen::Index i = 0; i < 3; ++i) {
      r.rates(3 + i, i) = params.gamma_e_mhz;
      r.rates(i, 3 + i) = params.gamma_s_mhz;
      r.rates(6, 3 + i) = upper(i) * params.gamma_isc1_mhz;
      r.rates(i, 6) = lower(i) * params.gamma_isc2_mhz;
      for (Eigen::Index j = 0; j < 3; ++j)
        if (i != j) r.rates(i, j) = mix;
      r.radiative.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(3 + i)});
    }
    r.spin_sublevels = {0, 1, 2};
  }
  fill_diagonal(r.rates);
  return r;
}

RateMatrix with_spin_mixing(RateMatrix r, std::size_t i, std::size_t j, double rate_mhz) {
  if (i >= r.size() || j >= r.size() || i == j) throw ValidationError("spin mixing needs two distinct states");
  if (!std::isfinite(rate_mhz) || rate_mhz < 0.0) throw ValidationError("mixing rate must be non-negative");
  const auto a = static_cast<Eigen::Index>(i);
  const auto b = static_cast<Eigen::Index>(j);
  r.rates(a, b) += rate_mhz;
  r.rates(b, a) += rate_mhz;
  fill_diagonal(r.rates);
  return r;
}

PopulationVector steady_state(const RateMatrix& r) {
  r.validate();
  const Eigen::Index n = r.rates.rows();
  Eigen::Index pivot_row = 0;
  r.rates.diagonal().cwiseAbs().maxCoeff(&pivot_row);

  Eigen::MatrixXd a = r.rates;
  a.row(pivot_row).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(pivot_row) = 1.0;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible()) throw NumericalError("rate matrix has more than one stationary state");
  PopulationVector x = lu.solve(rhs);

  const double residual = (r.rates * x).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, r.rates.cwiseAbs().maxCoeff());
  if (residual > 1e-12 * scale || x.minCoeff() < -1e-12)
    throw NumericalError("steady-state solve is ill-conditioned");
  x = x.cwiseMax(0.0);
  x /= x.sum();
  return x;
}

double steady_pl(const RateMatrix& r, const PopulationVector& x) {
  if (static_cast<std::size_t>(x.size()) != r.size()) throw ValidationError("population size mismatch");
  return radiative_flux(r, x);
}

double metastable_population(const RateMatrix& r, const PopulationVector& x) {
  double sum = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r.kinds[i] == StateKind::Metastable) sum += x(static_cast<Eigen::Index>(i));
  return sum;
}

PopulationVector post_emission_state(const RateMatrix& r, const PopulationVector& x) {
  PopulationVector out = PopulationVector::Zero(x.size());
  for (const Transition& t : r.radiative) out(t.to) += r.rates(t.to, t.from) * x(t.from);
  const double total = out.sum();
  if (!(total > 0.0)) throw NumericalError("no radiative flux in steady state");
  return out / total;
}

EigenPropagator::EigenPropagator(const RateMatrix& r, const PopulationVector& x0) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(r.rates);
  if (solver.info() != Eigen::Success) throw NumericalError("eigen-decomposition of the rate matrix failed");
  eigenvalues_ = solver.eigenvalues();
  eigenvectors_ = solver.eigenvectors();

  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(eigenvectors_);
  const Eigen::MatrixXcd inverse = lu.inverse();
  const Eigen::MatrixXcd rebuilt = eigenvectors_ * eigenvalues_.asDiagonal() * inverse;
  const double norm = std::max(1e-300, r.rates.norm());
  reconstruction_error_ = (rebuilt - r.rates.cast<std::complex<double>>()).norm() / norm;
  if (!std::isfinite(reconstruction_error_)) reconstruction_error_ = 1.0;

  // The stationary mode is exactly zero in exact arithmetic.
  Eigen::Index stationary = 0;
  eigenvalues_.cwiseAbs().minCoeff(&stationary);
  eigenvalues_(stationary) = 0.0;
  coefficients_ = lu.solve(x0.cast<std::complex<double>>());
}

PopulationVector EigenPropagator::at(double t_us) const {
  const Eigen::VectorXcd weights =
      coefficients_.array() * (eigenvalues_.array() * t_us).exp();
  return (eigenvectors_ * weights).real();
}

namespace {

void rk4_step(const Eigen::MatrixXd& a, const Eigen::VectorXd& x, double h, Eigen::VectorXd& out,
              Eigen::VectorXd& k1, Eigen::VectorXd& k2, Eigen::VectorXd& k3, Eigen::VectorXd& k4,
              Eigen::VectorXd& tmp) {
  k1.noalias() = a * x;
  tmp = x + 0.5 * h * k1;
  k2.noalias() = a * tmp;
  tmp = x + 0.5 * h * k2;
  k3.noalias() = a * tmp;
  tmp = x + h * k3;
  k4.noalias() = a * tmp;
  out = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

std::vector<PopulationVector> integrate_rk4(const RateMatrix& r, const PopulationVector& x0,
                                            std::span<const double> times_us,
                                            double relative_tolerance, double absolute_tolerance) {
  const Eigen::MatrixXd& a = r.rates;
  const Eigen::Index n = a.rows();
  if (x0.size() != n) throw ValidationError("initial population size mismatch");

  Eigen::VectorXd x = x0, full(n), half(n), twice(n), k1(n), k2(n), k3(n), k4(n), tmp(n);
  const double fastest = std::max(1e-300, a.diagonal().cwiseAbs().maxCoeff());
  double h = 1e-3 / fastest;
  double t = 0.0;

  std::vector<PopulationVector> out;
  out.reserve(times_us.size());
  for (double target : times_us) {
    if (target < t) throw ValidationError("integration times must be non-decreasing");
    while (t < target) {
      const double step = std::min(h, target - t);
      rk4_step(a, x, step, full, k1, k2, k3, k4, tmp);
      rk4_step(a, x, 0.5 * step, half, k1, k2, k3, k4, tmp);
      rk4_step(a, half, 0.5 * step, twice, k1, k2, k3, k4, tmp);

      double err = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double tol = absolute_tolerance +
                           relative_tolerance * std::max(std::abs(x(i)), std::abs(twice(i)));
        err = std::max(err, std::abs(twice(i) - full(i)) / 15.0 / tol);
      }
      const double factor = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 4.0;
      if (err <= 1.0) {
        x = twice;
        t = (step == target - t) ? target : t + step;
        h = std::max(h, step * std::clamp(factor, 1.0, 4.0));
        if (step < h && t != target) h = step * std::clamp(factor, 1.0, 4.0);
      } else {
        h = step * std::max(0.1, factor);
      }
      if (h < 1e-14 * std::max(1.0, t)) throw NumericalError("RK4 step size underflow");
    }
    out.push_back(x);
  }
  return out;
}

G2Curve simulate_g2(const RateMatrix& r, std::span<const double> delays_s, const G2Options& options) {
  for (std::size_t k = 0; k < delays_s.size(); ++k) {
    if (!std::isfinite(delays_s[k]) || delays_s[k] < 0.0) throw ValidationError("g2 delays must be >= 0");
    if (k > 0 && delays_s[k] <= delays_s[k - 1]) throw ValidationError("g2 delays must be strictly increasing");
  }
  const PopulationVector ss = steady_state(r);
  const double mean_pl = steady_pl(r, ss);
  if (!(mean_pl > 0.0)) throw NumericalError("steady-state PL vanishes");
  const PopulationVector x0 = options.start == G2Start::PostEmission ? post_emission_state(r, ss) : ss;

  std::vector<double> times_us(delays_s.size());
  for (std::size_t k = 0; k < delays_s.size(); ++k)
    times_us[k] = delays_s[k] / constants::kSecondsPerMicrosecond;

  G2Curve curve;
  curve.delays_s.assign(delays_s.begin(), delays_s.end());
  curve.values.resize(delays_s.size());

  bool use_rk = options.method == G2Method::RungeKutta;
  std::optional<EigenPropagator> propagator;
  if (!use_rk) {
    propagator.emplace(r, x0);
    if (propagator->reconstruction_error() > 1e-8) {
      if (options.method == G2Method::Eigen) throw NumericalError("rate matrix is numerically defective");
      use_rk = true;
    }
  }

  if (use_rk) {
    const auto states = integrate_rk4(r, x0, times_us, options.rk_relative_tolerance,
                                      options.rk_absolute_tolerance);
    for (std::size_t k = 0; k < states.size(); ++k) curve.values[k] = radiative_flux(r, states[k]) / mean_pl;
  } else {
    for (std::size_t k = 0; k < times_us.size(); ++k) {
      const PopulationVector x = times_us[k] == 0.0 ? x0 : propagator->at(times_us[k]);
      curve.values[k] = radiative_flux(r, x) / mean_pl;
    }
  }
  for (double& v : curve.values) {
    if (v < -1e-9) throw NumericalError("negative g2 value from propagation");
    v = std::max(v, 0.0);
  }
  return curve;
}

G2Curve simulate_g2(const LevelDiagram& diagram, const RateParameters& params, const SpinEigensystem& eig,
                    std::span<const double> delays_s, const G2Options& options) {
  return simulate_g2(build_rate_matrix(diagram, params, eig), delays_s, options);
}

std::vector<double> log_delays(double t_min_s, double t_max_s, int points_per_decade) {
  if (!(t_min_s > 0.0) || !(t_max_s > t_min_s) || points_per_decade < 1)
    throw ValidationError("log delays need 0 < t_min < t_max and points_per_decade >= 1");
  const double ratio = t_max_s / t_min_s;
  const auto n = std::max<long>(2, std::lround(std::log10(ratio) * points_per_decade) + 1);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (long k = 0; k < n; ++k)
    out[static_cast<std::size_t>(k)] = t_min_s * std::pow(ratio, static_cast<double>(k) / static_cast<double>(n - 1));
  out.back() = t_max_s;
  return out;
}

double pl_variation(double pl_b, double pl_0) {
  if (!std::isfinite(pl_b) || !std::isfinite(pl_0) || pl_0 == 0.0)
    throw ValidationError("PL variation needs finite values and nonzero reference");
  return (pl_b - pl_0) / pl_0;
}

double odmr_pl_variation(const LevelDiagram& diagram, const RateParameters& params, const SpinEigensystem& eig,
                         std::pair<int, int> pair, double gamma_odmr_mhz) {
  const RateMatrix base = build_rate_matrix(diagram, params, eig);
  const auto valid = [&](int state) {
    if (state < 1) return false;
    const auto idx = static_cast<std::size_t>(state - 1);
    return std::find(base.spin_sublevels.begin(), base.spin_sublevels.end(), idx) != base.spin_sublevels.end();
  };
  if (pair.first == pair.second || !valid(pair.first) || !valid(pair.second))
    throw ValidationError("ODMR pair must name two distinct spin-triplet eigenstates");
  const double i0 = steady_pl(base, steady_state(base));
  const RateMatrix driven = with_spin_mixing(base, static_cast<std::size_t>(pair.first - 1),
                                             static_cast<std::size_t>(pair.second - 1), gamma_odmr_mhz);
  const double imr = steady_pl(driven, steady_state(driven));
  return pl_variation(imr, i0);
}

double odmr_linewidth_floor_khz(const RateParameters& params) {
  require_positive(params.gamma_isc2_mhz, "gamma_isc2");
  return params.gamma_isc2_mhz / (2.0 * std::numbers::pi) * 1.0e3;
}

}  // namespace spinsim
