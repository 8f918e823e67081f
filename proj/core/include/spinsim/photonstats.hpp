#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinsim/dynamics.hpp"

namespace spinsim {

// One detector click. Channel 0 starts, channel 1 stops.
struct TimeTag {
  std::uint8_t channel = 0;
  std::int64_t timestamp_ps = 0;

  friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

struct Binning {
  enum class Kind { Linear, Log };
  Kind kind = Kind::Log;
  double width_s = 0.0;        // linear
  int points_per_decade = 10;  // log

  static Binning linear(double width_s) { return {Kind::Linear, width_s, 0}; }
  static Binning log(int points_per_decade) { return {Kind::Log, 0.0, points_per_decade}; }
};

struct DelayWindow {
  double t_min_s = 0.0;
  double t_max_s = 0.0;
};

// Bin edges in integer picoseconds for a window; edges are strictly increasing.
std::vector<std::int64_t> histogram_edges_ps(const Binning& binning, const DelayWindow& window);

struct G2Histogram {
  std::vector<double> bin_edges_s;  // size() + 1 entries
  std::vector<std::uint64_t> counts;
  std::vector<double> normalization;  // expected coincidences per bin if uncorrelated
  std::vector<double> values;         // counts / normalization
  std::vector<double> sigma;          // values / sqrt(counts); 1/normalization for empty bins
  bool log_spaced = true;

  std::size_t size() const { return counts.size(); }
  // Geometric bin centre for log bins, arithmetic otherwise.
  double center(std::size_t i) const;
  std::uint64_t total_counts() const;
};

struct CorrelatorOptions {
  std::size_t threads = 1;  // start-tag shards; result is independent of this
  // With >= 2, sigma is the standard error of g2 across this many contiguous
  // time segments (floored at the Poisson value). Poisson sigma understates
  // the noise when starts see many stops per bin from a blinking emitter.
  std::size_t batches = 0;
};

// Start/stop cross-correlation over positive delays. Only starts whose full
// window lies inside the record contribute, so the normalization is
// N_starts * (N_stops / span) * bin_width.
G2Histogram compute_g2(std::span<const TimeTag> tags, const Binning& binning, const DelayWindow& window,
                       const CorrelatorOptions& options = {});

// Builds values/sigma from raw counts and expected coincidences.
G2Histogram make_histogram(std::vector<double> edges_s, std::vector<std::uint64_t> counts,
                           std::vector<double> normalization, bool log_spaced);

// Fit input: bins [lo, hi] (lo == hi for point samples).
struct FitData {
  std::vector<double> lo_s, hi_s, values, sigma;
  // Expected uncorrelated coincidences per bin. When present the weights are
  // re-derived from the model (Poisson) instead of the observed counts.
  std::vector<double> normalization;
  // sigma is an absolute uncertainty; otherwise the covariance is scaled by
  // the reduced chi-square.
  bool absolute_sigma = true;

  std::size_t size() const { return values.size(); }
  static FitData from_histogram(const G2Histogram& h);
  static FitData from_points(std::vector<double> t_s, std::vector<double> values, std::vector<double> sigma);
  // Noise-free curve, unit weights.
  static FitData from_curve(const G2Curve& curve);
  void validate() const;
};

// g2(t) = 1 - C1 exp(-t/tau1) + sum_{i>=2} C_i exp(-t/tau_i)
struct EmpiricalFit {
  int order = 2;
  std::vector<double> c;
  std::vector<double> tau_s;
  Eigen::MatrixXd covariance;  // over (C1, tau1, C2, tau2, ...); NaN where unidentifiable
  double chi2 = 0.0;
  double reduced_chi2 = 0.0;
  std::size_t dof = 0;
  bool degenerate = false;  // some bunching component is unidentifiable

  double value(double t_s) const;
  double bin_average(double lo_s, double hi_s) const;
  double c_sigma(std::size_t i) const;
  double tau_sigma(std::size_t i) const;
};

struct FitOptions {
  std::vector<int> orders{2, 3};
  double improvement_threshold = 0.10;
  int restarts = 5;
  std::uint64_t seed = 20240611;
  int max_iterations = 400;
  int reweight_rounds = 8;
};

struct OrderSelection {
  EmpiricalFit best;
  std::vector<EmpiricalFit> candidates;  // converged fits, ascending order
};

// Weighted Levenberg-Marquardt fit at one order.
EmpiricalFit fit_empirical_order(const FitData& data, int order, const FitOptions& options = {});
// Fits every requested order and keeps the lowest one that the next order
// does not improve by more than the threshold in reduced chi-square.
OrderSelection fit_empirical(const FitData& data, const FitOptions& options = {});

// Short-delay form g2(t) = 1 - C1 exp(-|t|/tau1) + C2 with constant C2.
struct ShortDelayFit {
  double c1 = 0.0, tau1_s = 0.0, c2 = 0.0;
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  // (C1, tau1, C2)
  double reduced_chi2 = 0.0;

  double g0() const { return 1.0 - c1 + c2; }
  double g0_sigma() const;
};
ShortDelayFit fit_short_delay(const FitData& data, double t_max_s, const FitOptions& options = {});

class BackgroundRatio {
 public:
  explicit BackgroundRatio(double rho);
  // rho = sqrt(C / C_corrected).
  static BackgroundRatio from_amplitudes(double c, double c_corrected);
  double value() const { return rho_; }

 private:
  double rho_;
};

double background_correct_amplitude(double c, BackgroundRatio rho);
EmpiricalFit background_correct_amplitudes(const EmpiricalFit& fit, BackgroundRatio rho);
double background_correct_value(double g2, BackgroundRatio rho);
double background_restore_value(double g2_corrected, BackgroundRatio rho);
G2Histogram background_correct_curve(const G2Histogram& h, BackgroundRatio rho);
FitData background_correct_curve(const FitData& d, BackgroundRatio rho);
FitData background_restore_curve(const FitData& d, BackgroundRatio rho);

struct ThreeLevelRates {
  double gamma_s_mhz = 0.0;
  double gamma_isc1_mhz = 0.0;
  double gamma_isc2_mhz = 0.0;
};
// Inverts the three-level closed forms; tau in seconds, x = Gamma_e/Gamma_s.
ThreeLevelRates estimate_rates_three_level(double tau1_s, double tau2_s, double c2, double x);

struct MonteCarloStream {
  std::vector<TimeTag> tags;
  std::uint64_t transitions = 0;
  std::uint64_t photons = 0;
};
// Gillespie trajectory of R starting from a steady-state sample; each
// radiative jump emits a tag on channel 0 or 1 with probability 1/2.
MonteCarloStream monte_carlo_stream(const RateMatrix& r, double duration_s, std::uint64_t seed);

// Two independent Poisson channels (rates in counts/s), merged in time order.
std::vector<TimeTag> poisson_stream(double rate0_hz, double rate1_hz, double duration_s, std::uint64_t seed);

// Tag streams: CSV "channel,timestamp_ps" (optional header), or binary: a u64
// record count followed by records of u8 channel + u64 picoseconds, all
// little-endian.
std::vector<TimeTag> read_tags_csv(std::istream& in);
std::vector<TimeTag> read_tags_binary(std::istream& in);
void write_tags_csv(std::ostream& out, std::span<const TimeTag> tags);
void write_tags_binary(std::ostream& out, std::span<const TimeTag> tags);

}  // namespace spinsim
