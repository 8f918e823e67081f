#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "spinsim/errors.hpp"
#include "spinsim/photonstats.hpp"

namespace spinsim {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Expo {
  double value;
  double dlog;  // d value / d log(tau)
};

// exp(-t/tau) averaged over [lo, hi] with lo >= 0.
Expo positive_bin_exp(double lo, double hi, double tau) {
  const double w = hi - lo;
  if (w <= 1e-4 * tau) {
    const double m = 0.5 * (lo + hi);
    const double e = std::exp(-m / tau);
    return {e, (m / tau) * e};
  }
  const double ea = std::exp(-lo / tau);
  const double eb = std::exp(-hi / tau);
  return {tau * (ea - eb) / w, tau * (ea * (1.0 + lo / tau) - eb * (1.0 + hi / tau)) / w};
}

// exp(-|t|/tau) averaged over [lo, hi].
Expo bin_exp(double lo, double hi, double tau) {
  if (lo >= 0.0) return positive_bin_exp(lo, hi, tau);
  if (hi <= 0.0) return positive_bin_exp(-hi, -lo, tau);
  const Expo left = positive_bin_exp(0.0, -lo, tau);
  const Expo right = positive_bin_exp(0.0, hi, tau);
  const double wl = -lo / (hi - lo);
  const double wr = hi / (hi - lo);
  return {wl * left.value + wr * right.value, wl * left.dlog + wr * right.dlog};
}

// theta = [C1, log tau1, (C_k, log tau_k) for each bunching term, (offset)].
struct ModelSpec {
  int bunching = 1;
  bool offset = false;

  Eigen::Index size() const { return 2 + 2 * bunching + (offset ? 1 : 0); }
  bool is_log_tau(Eigen::Index k) const { return k < 2 + 2 * bunching && k % 2 == 1; }

  void eval(const Eigen::VectorXd& theta, const FitData& d, Eigen::VectorXd& model, Eigen::MatrixXd* jac) const {
    const auto n = static_cast<Eigen::Index>(d.size());
    model.setOnes(n);
    if (jac) jac->setZero(n, size());
    for (int comp = 0; comp <= bunching; ++comp) {
      const double sign = comp == 0 ? -1.0 : 1.0;
      const double c = theta(2 * comp);
      const double tau = std::exp(theta(2 * comp + 1));
      for (Eigen::Index i = 0; i < n; ++i) {
        const Expo e = bin_exp(d.lo_s[i], d.hi_s[i], tau);
        model(i) += sign * c * e.value;
        if (jac) {
          (*jac)(i, 2 * comp) = sign * e.value;
          (*jac)(i, 2 * comp + 1) = sign * c * e.dlog;
        }
      }
    }
    if (offset) {
      model.array() += theta(size() - 1);
      if (jac) jac->col(size() - 1).setOnes();
    }
  }
};

struct Bounds {
  double log_tau_min;
  double log_tau_max;
};

struct LmResult {
  Eigen::VectorXd theta;
  Eigen::MatrixXd jtj;  // weighted J^T J at the optimum
  Eigen::VectorXd inv_sigma;
  double chi2 = std::numeric_limits<double>::infinity();
  bool ok = false;
};

// Bunching terms must decay at least this many times slower than the
// antibunching term; closer exponentials are not separable.
constexpr double kMinTauRatio = 2.0;

void clamp_theta(const ModelSpec& spec, const Bounds& b, Eigen::VectorXd& theta) {
  for (Eigen::Index k = 0; k < theta.size(); ++k)
    if (spec.is_log_tau(k)) theta(k) = std::clamp(theta(k), b.log_tau_min, b.log_tau_max);
  const double floor = std::min(theta(1) + std::log(kMinTauRatio), b.log_tau_max);
  for (int comp = 1; comp <= spec.bunching; ++comp) theta(2 * comp + 1) = std::max(theta(2 * comp + 1), floor);
}

double weighted_chi2(const ModelSpec& spec, const FitData& d, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& inv_sigma, const Eigen::VectorXd& theta, Eigen::VectorXd& model) {
  spec.eval(theta, d, model, nullptr);
  const double chi2 = ((model - y).cwiseProduct(inv_sigma)).squaredNorm();
  return std::isfinite(chi2) ? chi2 : std::numeric_limits<double>::infinity();
}

LmResult levenberg_marquardt(const ModelSpec& spec, const FitData& d, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& inv_sigma, Eigen::VectorXd theta, const Bounds& bounds,
                             int max_iterations) {
  clamp_theta(spec, bounds, theta);
  const Eigen::Index p = spec.size();
  Eigen::VectorXd model, trial_model;
  Eigen::MatrixXd jac;
  spec.eval(theta, d, model, &jac);
  double chi2 = ((model - y).cwiseProduct(inv_sigma)).squaredNorm();
  LmResult out;
  if (!std::isfinite(chi2)) return out;

  double lambda = 1e-3;
  int quiet = 0;
  for (int iter = 0; iter < max_iterations; ++iter) {
    const Eigen::MatrixXd wj = inv_sigma.asDiagonal() * jac;
    const Eigen::VectorXd r = (model - y).cwiseProduct(inv_sigma);
    const Eigen::MatrixXd h = wj.transpose() * wj;
    const Eigen::VectorXd g = wj.transpose() * r;
    const double diag_floor = 1e-12 * std::max(1e-300, h.diagonal().maxCoeff());

    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd a = h;
      for (Eigen::Index k = 0; k < p; ++k) a(k, k) += lambda * std::max(h(k, k), diag_floor);
      Eigen::VectorXd step = -a.ldlt().solve(g);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      // Keep single steps from jumping decades in tau.
      for (Eigen::Index k = 0; k < p; ++k)
        if (spec.is_log_tau(k)) step(k) = std::clamp(step(k), -2.0, 2.0);
      Eigen::VectorXd trial = theta + step;
      clamp_theta(spec, bounds, trial);
      const double trial_chi2 = weighted_chi2(spec, d, y, inv_sigma, trial, trial_model);
      if (trial_chi2 < chi2) {
        const double decrease = chi2 - trial_chi2;
        const double step_size = (trial - theta).cwiseAbs().maxCoeff();
        theta = trial;
        chi2 = trial_chi2;
        spec.eval(theta, d, model, &jac);
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        quiet = (decrease <= 1e-14 * chi2 || step_size <= 1e-13 * (1.0 + theta.cwiseAbs().maxCoeff())) ? quiet + 1 : 0;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted || quiet >= 3 || chi2 == 0.0) break;
  }

  const Eigen::MatrixXd wj = inv_sigma.asDiagonal() * jac;
  out.theta = theta;
  out.jtj = wj.transpose() * wj;
  out.inv_sigma = inv_sigma;
  out.chi2 = chi2;
  out.ok = theta.allFinite() && std::isfinite(chi2);
  return out;
}

Eigen::VectorXd poisson_inv_sigma(const FitData& d, const Eigen::VectorXd& model) {
  Eigen::VectorXd inv(model.size());
  for (Eigen::Index i = 0; i < model.size(); ++i) {
    const double norm = d.normalization[static_cast<std::size_t>(i)];
    const double expected = std::max(model(i) * norm, 1e-2);
    inv(i) = norm / std::sqrt(expected);
  }
  return inv;
}

// Poisson data are refit with weights from the current model until the
// parameters settle (the fixed point is the Poisson maximum likelihood).
LmResult weighted_fit(const ModelSpec& spec, const FitData& d, const Eigen::VectorXd& seed, const Bounds& bounds,
                      const FitOptions& options) {
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(d.values.data(), static_cast<Eigen::Index>(d.size()));
  if (d.normalization.empty()) {
    Eigen::VectorXd inv(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) inv(i) = 1.0 / d.sigma[static_cast<std::size_t>(i)];
    return levenberg_marquardt(spec, d, y, inv, seed, bounds, options.max_iterations);
  }
  Eigen::VectorXd theta = seed;
  clamp_theta(spec, bounds, theta);
  LmResult result;
  Eigen::VectorXd model;
  for (int round = 0; round < std::max(1, options.reweight_rounds); ++round) {
    spec.eval(theta, d, model, nullptr);
    if (!model.allFinite()) return {};
    result = levenberg_marquardt(spec, d, y, poisson_inv_sigma(d, model), theta, bounds, options.max_iterations);
    if (!result.ok) return result;
    const double change = (result.theta - theta).cwiseAbs().maxCoeff();
    theta = result.theta;
    if (round > 0 && change < 1e-9) break;
  }
  // Final chi-square and curvature with weights from the converged model.
  spec.eval(theta, d, model, nullptr);
  return levenberg_marquardt(spec, d, y, poisson_inv_sigma(d, model), theta, bounds, 1);
}

struct Covariance {
  Eigen::MatrixXd cov;        // in (C, log tau) coordinates
  std::vector<bool> unknown;  // unidentifiable parameters
};

Covariance invert_curvature(const Eigen::MatrixXd& jtj) {
  const Eigen::Index p = jtj.rows();
  Covariance out;
  out.unknown.assign(static_cast<std::size_t>(p), false);
  // Scale to unit diagonal so the rank test is independent of units.
  Eigen::VectorXd scale(p);
  for (Eigen::Index k = 0; k < p; ++k) scale(k) = jtj(k, k) > 0.0 ? 1.0 / std::sqrt(jtj(k, k)) : 0.0;
  const Eigen::MatrixXd scaled = scale.asDiagonal() * jtj * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scaled);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double top = std::max(ev.maxCoeff(), 1e-300);
  Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const Eigen::VectorXd v = es.eigenvectors().col(k);
    if (ev(k) > 1e-12 * top) {
      inv += v * v.transpose() / ev(k);
    } else {
      for (Eigen::Index j = 0; j < p; ++j)
        if (v(j) * v(j) > 1e-2) out.unknown[static_cast<std::size_t>(j)] = true;
    }
  }
  for (Eigen::Index k = 0; k < p; ++k)
    if (scale(k) == 0.0) out.unknown[static_cast<std::size_t>(k)] = true;
  // Every parameter (C_k, log tau_k) is dimensionless, so the unscaled
  // spectrum also exposes directions that only vanish with an amplitude.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> raw(jtj);
  const double raw_top = std::max(raw.eigenvalues().maxCoeff(), 1e-300);
  for (Eigen::Index k = 0; k < p; ++k) {
    if (raw.eigenvalues()(k) > 1e-12 * raw_top) continue;
    for (Eigen::Index j = 0; j < p; ++j)
      if (raw.eigenvectors()(j, k) * raw.eigenvectors()(j, k) > 1e-2) out.unknown[static_cast<std::size_t>(j)] = true;
  }
  out.cov = scale.asDiagonal() * inv * scale.asDiagonal();
  for (Eigen::Index k = 0; k < p; ++k) {
    if (!out.unknown[static_cast<std::size_t>(k)]) continue;
    out.cov.row(k).setConstant(kNaN);
    out.cov.col(k).setConstant(kNaN);
  }
  return out;
}

std::optional<EmpiricalFit> package_fit(const ModelSpec& spec, const FitData& d, const LmResult& lm) {
  if (!lm.ok) return std::nullopt;
  const int order = spec.bunching + 1;
  const Covariance cov = invert_curvature(lm.jtj);
  if (cov.unknown[0] || cov.unknown[1]) return std::nullopt;
  if (!(lm.theta(0) > 0.0)) return std::nullopt;

  // Bunching terms sorted by tau.
  std::vector<int> perm(static_cast<std::size_t>(spec.bunching));
  std::iota(perm.begin(), perm.end(), 1);
  std::sort(perm.begin(), perm.end(), [&](int a, int b) { return lm.theta(2 * a + 1) < lm.theta(2 * b + 1); });
  perm.insert(perm.begin(), 0);

  EmpiricalFit fit;
  fit.order = order;
  const Eigen::Index p = spec.size();
  Eigen::VectorXi index(p);
  for (int k = 0; k < order; ++k) {
    index(2 * k) = 2 * perm[static_cast<std::size_t>(k)];
    index(2 * k + 1) = 2 * perm[static_cast<std::size_t>(k)] + 1;
    fit.c.push_back(lm.theta(index(2 * k)));
    fit.tau_s.push_back(std::exp(lm.theta(index(2 * k + 1))));
  }
  for (std::size_t k = 1; k < fit.tau_s.size(); ++k)
    if (!(fit.tau_s[k] > fit.tau_s[k - 1] * (1.0 + 1e-6))) return std::nullopt;
  if (fit.tau_s.size() > 1 && fit.tau_s[1] < fit.tau_s[0] * kMinTauRatio * (1.0 - 1e-9)) return std::nullopt;

  fit.covariance.resize(p, p);
  for (Eigen::Index a = 0; a < p; ++a) {
    const double ja = spec.is_log_tau(a) ? fit.tau_s[static_cast<std::size_t>(a / 2)] : 1.0;
    for (Eigen::Index b = 0; b < p; ++b) {
      const double jb = spec.is_log_tau(b) ? fit.tau_s[static_cast<std::size_t>(b / 2)] : 1.0;
      fit.covariance(a, b) = ja * jb * cov.cov(index(a), index(b));
    }
  }
  fit.degenerate = std::any_of(cov.unknown.begin(), cov.unknown.end(), [](bool u) { return u; });
  fit.chi2 = lm.chi2;
  fit.dof = d.size() > static_cast<std::size_t>(p) ? d.size() - static_cast<std::size_t>(p) : 0;
  fit.reduced_chi2 = fit.dof > 0 ? fit.chi2 / static_cast<double>(fit.dof) : kNaN;
  if (!d.absolute_sigma && fit.dof > 0) fit.covariance *= fit.reduced_chi2;
  return fit;
}

struct Features {
  double t_first = 0.0;
  double t_last = 0.0;
  double g_first = 1.0;
  double tau_anti = 0.0;
  double tau_bunch = 0.0;
  double c_bunch = 0.0;
};

double center_of(const FitData& d, std::size_t i) { return 0.5 * (std::abs(d.lo_s[i]) + std::abs(d.hi_s[i])); }

Features extract_features(const FitData& d) {
  Features f;
  const std::size_t n = d.size();
  f.t_first = std::max(center_of(d, 0), 1e-15);
  f.t_last = std::max(center_of(d, n - 1), 2.0 * f.t_first);
  const std::size_t head = std::min<std::size_t>(3, n);
  f.g_first = std::accumulate(d.values.begin(), d.values.begin() + static_cast<long>(head), 0.0) / static_cast<double>(head);

  const auto peak_it = std::max_element(d.values.begin(), d.values.end());
  const auto peak = static_cast<std::size_t>(peak_it - d.values.begin());
  const double g_peak = *peak_it;

  // Bunching decay from a log-linear regression after the peak.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = peak; i < n; ++i) {
    const double excess = d.values[i] - 1.0;
    if (g_peak <= 1.0 || excess <= 0.05 * (g_peak - 1.0)) continue;
    const double t = center_of(d, i);
    const double ly = std::log(excess);
    sx += t, sy += ly, sxx += t * t, sxy += t * ly;
    ++m;
  }
  const double denom = m * sxx - sx * sx;
  const double slope = m >= 3 && denom > 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
  if (slope < 0.0) {
    f.tau_bunch = -1.0 / slope;
    f.c_bunch = std::exp((sy - slope * sx) / m);
  } else {
    f.tau_bunch = std::max(10.0 * center_of(d, peak), f.t_last / 10.0);
    f.c_bunch = std::max(g_peak - 1.0, 0.05);
  }
  f.c_bunch = std::clamp(f.c_bunch, 1e-3, 1e3);

  // Antibunching: half-recovery delay of the dip.
  f.tau_anti = 0.0;
  if (g_peak > f.g_first) {
    const double half = f.g_first + 0.5 * (g_peak - f.g_first);
    for (std::size_t i = 0; i <= peak; ++i) {
      if (d.values[i] >= half) {
        f.tau_anti = center_of(d, i) / std::log(2.0);
        break;
      }
    }
  }
  if (!(f.tau_anti > 0.0)) f.tau_anti = 2.0 * f.t_first;
  f.tau_anti = std::min(f.tau_anti, f.tau_bunch / 3.0);
  f.tau_bunch = std::max(f.tau_bunch, 3.0 * f.tau_anti);
  return f;
}

Eigen::VectorXd make_theta(double c1, double tau1, const std::vector<std::pair<double, double>>& bunching) {
  Eigen::VectorXd theta(2 + 2 * static_cast<Eigen::Index>(bunching.size()));
  theta(0) = c1;
  theta(1) = std::log(tau1);
  for (std::size_t k = 0; k < bunching.size(); ++k) {
    theta(2 + 2 * static_cast<Eigen::Index>(k)) = bunching[k].first;
    theta(3 + 2 * static_cast<Eigen::Index>(k)) = std::log(bunching[k].second);
  }
  return theta;
}

std::vector<Eigen::VectorXd> feature_seeds(const Features& f, int order) {
  const double c1 = std::max(0.1, 1.0 + f.c_bunch - f.g_first);
  std::vector<Eigen::VectorXd> seeds;
  const std::vector<std::vector<double>> spreads{{1.0, 10.0, 100.0}, {0.2, 1.0, 5.0}, {1.0, 0.1, 30.0}};
  const std::vector<double> weights{1.0, 0.05, 0.01};
  for (const auto& spread : spreads) {
    std::vector<std::pair<double, double>> bunching;
    for (int k = 0; k + 1 < order; ++k) {
      const auto i = static_cast<std::size_t>(k);
      const double tau = std::max(f.tau_bunch * spread[i], 2.0 * f.tau_anti);
      bunching.emplace_back(f.c_bunch * (k == 0 ? 1.0 : weights[i]), tau);
    }
    seeds.push_back(make_theta(c1, f.tau_anti, bunching));
  }
  return seeds;
}

std::vector<Eigen::VectorXd> extension_seeds(const EmpiricalFit& lower, const Features& f) {
  std::vector<Eigen::VectorXd> seeds;
  std::vector<std::pair<double, double>> base;
  for (std::size_t k = 1; k < lower.c.size(); ++k) base.emplace_back(lower.c[k], lower.tau_s[k]);
  const double tau_top = lower.tau_s.back();
  const double c_top = std::max(std::abs(lower.c.back()), 1e-3);
  const double tau_mid = lower.tau_s.size() > 1 ? std::sqrt(lower.tau_s[0] * lower.tau_s[1]) : tau_top;
  for (const auto& extra : {std::make_pair(0.05 * c_top, 10.0 * tau_top), std::make_pair(0.05 * c_top, 3.0 * tau_top),
                            std::make_pair(0.1 * c_top, tau_mid), std::make_pair(0.05 * c_top, f.t_last / 3.0)}) {
    auto b = base;
    b.push_back(extra);
    seeds.push_back(make_theta(lower.c[0], lower.tau_s[0], b));
  }
  return seeds;
}

Bounds bounds_for(const FitData& d) {
  double smallest = std::numeric_limits<double>::infinity();
  double largest = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double a = std::abs(d.lo_s[i]), b = std::abs(d.hi_s[i]);
    const double hi = std::max(a, b);
    if (hi > 0.0) smallest = std::min(smallest, hi);
    largest = std::max(largest, hi);
  }
  return {std::log(smallest * 1e-3), std::log(largest * 1e3)};
}

std::optional<EmpiricalFit> fit_order(const FitData& data, int order, const FitOptions& options,
                                      const EmpiricalFit* lower) {
  const ModelSpec spec{order - 1, false};
  const Features features = extract_features(data);
  const Bounds bounds = bounds_for(data);

  std::vector<Eigen::VectorXd> seeds = feature_seeds(features, order);
  if (lower && lower->order + 1 == order) {
    const auto ext = extension_seeds(*lower, features);
    seeds.insert(seeds.end(), ext.begin(), ext.end());
  }

  std::optional<EmpiricalFit> best;
  Eigen::VectorXd best_seed = seeds.front();
  const auto consider = [&](const Eigen::VectorXd& seed) {
    const LmResult lm = weighted_fit(spec, data, seed, bounds, options);
    auto fit = package_fit(spec, data, lm);
    if (fit && (!best || fit->chi2 < best->chi2)) {
      best = std::move(fit);
      best_seed = lm.theta;
    }
  };
  for (const auto& seed : seeds) consider(seed);

  std::mt19937_64 rng(options.seed + static_cast<std::uint64_t>(order));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int r = 0; r < options.restarts; ++r) {
    Eigen::VectorXd seed = best ? best_seed : seeds[static_cast<std::size_t>(r) % seeds.size()];
    for (Eigen::Index k = 0; k < seed.size(); ++k)
      seed(k) = spec.is_log_tau(k) ? seed(k) + 0.5 * normal(rng) : seed(k) * std::exp(0.3 * normal(rng));
    consider(seed);
  }
  return best;
}

}  // namespace

double EmpiricalFit::value(double t_s) const { return bin_average(t_s, t_s); }

double EmpiricalFit::bin_average(double lo_s, double hi_s) const {
  double g = 1.0;
  for (std::size_t k = 0; k < c.size(); ++k) g += (k == 0 ? -1.0 : 1.0) * c[k] * bin_exp(lo_s, hi_s, tau_s[k]).value;
  return g;
}

double EmpiricalFit::c_sigma(std::size_t i) const {
  const auto k = static_cast<Eigen::Index>(2 * i);
  return std::sqrt(covariance(k, k));
}

double EmpiricalFit::tau_sigma(std::size_t i) const {
  const auto k = static_cast<Eigen::Index>(2 * i + 1);
  return std::sqrt(covariance(k, k));
}

double ShortDelayFit::g0_sigma() const {
  return std::sqrt(covariance(0, 0) + covariance(2, 2) - 2.0 * covariance(0, 2));
}

FitData FitData::from_histogram(const G2Histogram& h) {
  FitData d;
  for (std::size_t i = 0; i < h.size(); ++i) {
    d.lo_s.push_back(h.bin_edges_s[i]);
    d.hi_s.push_back(h.bin_edges_s[i + 1]);
  }
  d.values = h.values;
  d.sigma = h.sigma;
  d.normalization = h.normalization;
  d.absolute_sigma = true;
  return d;
}

FitData FitData::from_points(std::vector<double> t_s, std::vector<double> values, std::vector<double> sigma) {
  FitData d;
  d.lo_s = t_s;
  d.hi_s = std::move(t_s);
  d.values = std::move(values);
  d.sigma = std::move(sigma);
  d.absolute_sigma = true;
  return d;
}

FitData FitData::from_curve(const G2Curve& curve) {
  FitData d = from_points(curve.delays_s, curve.values, std::vector<double>(curve.values.size(), 1.0));
  d.absolute_sigma = false;
  return d;
}

void FitData::validate() const {
  const std::size_t n = values.size();
  if (lo_s.size() != n || hi_s.size() != n || sigma.size() != n)
    throw ValidationError("fit data columns differ in length");
  if (!normalization.empty() && normalization.size() != n)
    throw ValidationError("fit normalization column has the wrong length");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(lo_s[i]) || !std::isfinite(hi_s[i]) || !std::isfinite(values[i]) || hi_s[i] < lo_s[i])
      throw ValidationError("fit data contain non-finite values or inverted bins");
    if (i > 0 && lo_s[i] < lo_s[i - 1]) throw ValidationError("fit data must be sorted by delay");
    if (normalization.empty() && !(sigma[i] > 0.0)) throw ValidationError("fit uncertainties must be positive");
    if (!normalization.empty() && !(normalization[i] > 0.0))
      throw ValidationError("fit normalization must be positive");
  }
}

EmpiricalFit fit_empirical_order(const FitData& data, int order, const FitOptions& options) {
  data.validate();
  if (order < 2 || order > 4) throw ValidationError("empirical model order must be 2, 3 or 4");
  if (data.size() < static_cast<std::size_t>(10 * order))
    throw ValidationError("need at least 10 bins per model order");
  auto fit = fit_order(data, order, options, nullptr);
  if (!fit) throw NumericalError("empirical fit did not converge to an identifiable antibunching term");
  return *fit;
}

OrderSelection fit_empirical(const FitData& data, const FitOptions& options) {
  data.validate();
  std::vector<int> orders = options.orders;
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
  if (orders.empty()) throw ValidationError("no model orders requested");
  for (int n : orders)
    if (n < 2 || n > 4) throw ValidationError("empirical model order must be 2, 3 or 4");
  if (data.size() < static_cast<std::size_t>(10 * orders.back()))
    throw ValidationError("need at least 10 bins per model order");
  if (!(options.improvement_threshold >= 0.0 && options.improvement_threshold < 1.0))
    throw ValidationError("improvement threshold must lie in [0, 1)");

  OrderSelection out;
  std::vector<std::optional<EmpiricalFit>> fits;
  fits.reserve(orders.size());  // `lower` points into this vector
  const EmpiricalFit* lower = nullptr;
  for (int n : orders) {
    fits.push_back(fit_order(data, n, options, lower));
    if (fits.back()) {
      out.candidates.push_back(*fits.back());
      lower = &*fits.back();
    }
  }

  // Lowest order not improved by more than the threshold by the next order.
  std::optional<std::size_t> chosen;
  for (std::size_t k = 0; k < fits.size() && !chosen; ++k) {
    if (!fits[k]) continue;
    const bool last = k + 1 == fits.size();
    const bool next_improves =
        !last && fits[k + 1] &&
        fits[k + 1]->reduced_chi2 < (1.0 - options.improvement_threshold) * fits[k]->reduced_chi2 - 1e-12;
    if (!next_improves) chosen = k;
  }
  if (!chosen) throw NumericalError("empirical fit did not converge at any requested order");
  out.best = *fits[*chosen];
  return out;
}

ShortDelayFit fit_short_delay(const FitData& data, double t_max_s, const FitOptions& options) {
  data.validate();
  if (!(t_max_s > 0.0)) throw ValidationError("short-delay window must be positive");
  FitData d;
  d.absolute_sigma = data.absolute_sigma;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (center_of(data, i) > t_max_s) continue;
    d.lo_s.push_back(data.lo_s[i]);
    d.hi_s.push_back(data.hi_s[i]);
    d.values.push_back(data.values[i]);
    d.sigma.push_back(data.sigma[i]);
    if (!data.normalization.empty()) d.normalization.push_back(data.normalization[i]);
  }
  if (d.size() < 10) throw ValidationError("short-delay fit needs at least 10 bins inside the window");

  const ModelSpec spec{0, true};
  const Bounds bounds = bounds_for(d);
  const std::size_t tail = std::max<std::size_t>(1, d.size() / 5);
  const double plateau =
      std::accumulate(d.values.end() - static_cast<long>(tail), d.values.end(), 0.0) / static_cast<double>(tail);
  const std::size_t head = std::min<std::size_t>(3, d.size());
  const double g_first =
      std::accumulate(d.values.begin(), d.values.begin() + static_cast<long>(head), 0.0) / static_cast<double>(head);

  double tau = 0.0;
  const double half = g_first + 0.5 * (plateau - g_first);
  for (std::size_t i = 0; i < d.size(); ++i)
    if ((plateau >= g_first && d.values[i] >= half) || (plateau < g_first && d.values[i] <= half)) {
      tau = std::max(center_of(d, i), 1e-15) / std::log(2.0);
      break;
    }
  if (!(tau > 0.0)) tau = t_max_s / 10.0;

  std::optional<LmResult> best;
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd seed(3);
  seed << std::max(0.1, plateau - g_first), std::log(tau), plateau - 1.0;
  for (int r = 0; r <= options.restarts; ++r) {
    Eigen::VectorXd s = best ? best->theta : seed;
    if (r > 0) {
      s(0) *= std::exp(0.3 * normal(rng));
      s(1) += 0.5 * normal(rng);
      s(2) += 0.1 * normal(rng);
    }
    LmResult lm = weighted_fit(spec, d, s, bounds, options);
    if (lm.ok && (!best || lm.chi2 < best->chi2)) best = lm;
  }
  if (!best) throw NumericalError("short-delay fit did not converge");

  const Covariance cov = invert_curvature(best->jtj);
  if (cov.unknown[0] || cov.unknown[1]) throw NumericalError("short-delay fit is degenerate");
  ShortDelayFit out;
  out.c1 = best->theta(0);
  out.tau1_s = std::exp(best->theta(1));
  out.c2 = best->theta(2);
  const std::size_t dof = d.size() - 3;
  out.reduced_chi2 = best->chi2 / static_cast<double>(dof);
  const Eigen::Vector3d jac(1.0, out.tau1_s, 1.0);
  out.covariance = jac.asDiagonal() * cov.cov * jac.asDiagonal();
  if (!d.absolute_sigma) out.covariance *= out.reduced_chi2;
  return out;
}

}  // namespace spinsim
