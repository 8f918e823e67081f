#include <algorithm>
#include <cmath>
#include <random>

#include "spinsim/errors.hpp"
#include "spinsim/photonstats.hpp"

namespace spinsim {

MonteCarloStream monte_carlo_stream(const RateMatrix& r, double duration_s, std::uint64_t seed) {
  r.validate();
  if (!std::isfinite(duration_s) || duration_s < 0.0) throw ValidationError("duration must be finite and >= 0");
  MonteCarloStream out;
  if (duration_s == 0.0) return out;

  const std::size_t n = r.size();
  struct Jump {
    std::size_t to;
    double rate;
    bool radiative;
  };
  std::vector<std::vector<Jump>> jumps(n);
  std::vector<double> exit_rate(n, 0.0);
  for (std::size_t from = 0; from < n; ++from) {
    for (std::size_t to = 0; to < n; ++to) {
      const double rate = r.rates(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from));
      if (to == from || rate <= 0.0) continue;
      bool radiative = false;
      for (const Transition& t : r.radiative) radiative |= t.to == to && t.from == from;
      jumps[from].push_back({to, rate, radiative});
      exit_rate[from] += rate;
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::bernoulli_distribution beamsplitter(0.5);

  const PopulationVector ss = steady_state(r);
  std::discrete_distribution<std::size_t> initial(ss.data(), ss.data() + ss.size());
  std::size_t state = initial(rng);

  const double end_us = duration_s * 1.0e6;
  double t_us = 0.0;
  while (exit_rate[state] > 0.0) {
    t_us += -std::log1p(-uniform(rng)) / exit_rate[state];
    if (t_us > end_us) break;
    double pick = uniform(rng) * exit_rate[state];
    const Jump* jump = &jumps[state].back();
    for (const Jump& j : jumps[state]) {
      if (pick < j.rate) {
        jump = &j;
        break;
      }
      pick -= j.rate;
    }
    ++out.transitions;
    if (jump->radiative) {
      const auto channel = static_cast<std::uint8_t>(beamsplitter(rng) ? 1 : 0);
      out.tags.push_back({channel, static_cast<std::int64_t>(std::floor(t_us * 1.0e6))});
      ++out.photons;
    }
    state = jump->to;
  }
  return out;
}

std::vector<TimeTag> poisson_stream(double rate0_hz, double rate1_hz, double duration_s, std::uint64_t seed) {
  for (double rate : {rate0_hz, rate1_hz})
    if (!std::isfinite(rate) || rate <= 0.0) throw ValidationError("Poisson rates must be positive");
  if (!std::isfinite(duration_s) || duration_s <= 0.0) throw ValidationError("duration must be positive");
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> gap0(rate0_hz * 1e-12), gap1(rate1_hz * 1e-12);
  const double end_ps = duration_s * 1e12;
  std::vector<TimeTag> tags;
  for (std::uint8_t ch : {std::uint8_t{0}, std::uint8_t{1}}) {
    auto& gap = ch == 0 ? gap0 : gap1;
    for (double t = gap(rng); t < end_ps; t += gap(rng)) tags.push_back({ch, static_cast<std::int64_t>(std::floor(t))});
  }
  std::stable_sort(tags.begin(), tags.end(),
                   [](const TimeTag& a, const TimeTag& b) { return a.timestamp_ps < b.timestamp_ps; });
  return tags;
}

}  // namespace spinsim
