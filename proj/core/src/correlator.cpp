#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include "spinsim/errors.hpp"
#include "spinsim/photonstats.hpp"

namespace spinsim {
namespace {

constexpr double kPicosecondsPerSecond = 1.0e12;

std::int64_t to_ps(double seconds) { return std::llround(seconds * kPicosecondsPerSecond); }

struct ChannelSplit {
  std::vector<std::int64_t> starts;
  std::vector<std::int64_t> stops;
};

ChannelSplit split_channels(std::span<const TimeTag> tags) {
  ChannelSplit out;
  for (const TimeTag& tag : tags) {
    if (tag.channel > 1) throw ValidationError("tag channel must be 0 or 1");
    auto& dst = tag.channel == 0 ? out.starts : out.stops;
    if (!dst.empty() && tag.timestamp_ps < dst.back())
      throw ValidationError("timestamps must be non-decreasing within each channel");
    dst.push_back(tag.timestamp_ps);
  }
  return out;
}

void correlate_shard(std::span<const std::int64_t> starts, std::span<const std::int64_t> stops,
                     std::span<const std::int64_t> edges, std::vector<std::uint64_t>& counts) {
  const std::int64_t lo = edges.front();
  const std::int64_t hi = edges.back();
  if (starts.empty()) return;
  auto first = std::lower_bound(stops.begin(), stops.end(), starts.front() + lo);
  for (const std::int64_t t0 : starts) {
    while (first != stops.end() && *first - t0 < lo) ++first;
    for (auto it = first; it != stops.end(); ++it) {
      const std::int64_t delay = *it - t0;
      if (delay >= hi) break;
      const auto bin = std::upper_bound(edges.begin(), edges.end(), delay) - edges.begin() - 1;
      ++counts[static_cast<std::size_t>(bin)];
    }
  }
}

}  // namespace

G2Histogram compute_g2(std::span<const TimeTag> tags, const Binning& binning, const DelayWindow& window,
                       const CorrelatorOptions& options);

namespace {

void apply_batch_sigma(G2Histogram& h, std::span<const TimeTag> tags, const Binning& binning,
                       const DelayWindow& window, CorrelatorOptions options) {
  const std::size_t k = options.batches;
  options.batches = 0;
  std::int64_t first = tags.front().timestamp_ps, last = first;
  for (const TimeTag& t : tags) {
    first = std::min(first, t.timestamp_ps);
    last = std::max(last, t.timestamp_ps);
  }
  std::vector<double> sum(h.size(), 0.0), sum2(h.size(), 0.0);
  // Partition by time; per-channel order is preserved, no global sort needed.
  std::vector<std::vector<TimeTag>> segments(k);
  const auto width = static_cast<double>(last - first + 1) / static_cast<double>(k);
  for (const TimeTag& t : tags)
    segments[std::min(k - 1, static_cast<std::size_t>(static_cast<double>(t.timestamp_ps - first) / width))].push_back(t);
  for (const auto& segment : segments) {
    G2Histogram part;
    try {
      part = compute_g2(segment, binning, window, options);
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("batch segment too short for the delay window: ") + e.what());
    }
    for (std::size_t i = 0; i < h.size(); ++i) {
      sum[i] += part.values[i];
      sum2[i] += part.values[i] * part.values[i];
    }
  }
  const auto n = static_cast<double>(k);
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double mean = sum[i] / n;
    const double se = std::sqrt(std::max(0.0, sum2[i] / n - mean * mean) / (n - 1.0));
    h.sigma[i] = std::max(h.sigma[i], se);
  }
}

}  // namespace

std::vector<std::int64_t> histogram_edges_ps(const Binning& binning, const DelayWindow& window) {
  const double t0 = window.t_min_s;
  const double t1 = window.t_max_s;
  if (!std::isfinite(t0) || !std::isfinite(t1) || t0 < 0.0 || t1 <= t0)
    throw ValidationError("delay window needs 0 <= t_min < t_max");

  std::vector<std::int64_t> edges;
  if (binning.kind == Binning::Kind::Linear) {
    if (!(binning.width_s > 0.0)) throw ValidationError("linear bin width must be positive");
    const auto n = std::max<long long>(1, std::llround((t1 - t0) / binning.width_s));
    for (long long k = 0; k <= n; ++k) edges.push_back(to_ps(t0 + static_cast<double>(k) * binning.width_s));
  } else {
    if (!(t0 > 0.0)) throw ValidationError("log binning needs t_min > 0");
    if (binning.points_per_decade < 1) throw ValidationError("points per decade must be >= 1");
    const double ratio = t1 / t0;
    const auto n = std::max<long>(1, std::lround(std::log10(ratio) * binning.points_per_decade));
    for (long k = 0; k <= n; ++k)
      edges.push_back(to_ps(t0 * std::pow(ratio, static_cast<double>(k) / static_cast<double>(n))));
  }
  for (std::size_t k = 1; k < edges.size(); ++k)
    if (edges[k] <= edges[k - 1]) throw ValidationError("bins are narrower than the 1 ps tick");
  return edges;
}

double G2Histogram::center(std::size_t i) const {
  const double lo = bin_edges_s.at(i);
  const double hi = bin_edges_s.at(i + 1);
  return log_spaced && lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
}

std::uint64_t G2Histogram::total_counts() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

G2Histogram make_histogram(std::vector<double> edges_s, std::vector<std::uint64_t> counts,
                           std::vector<double> normalization, bool log_spaced) {
  if (edges_s.size() != counts.size() + 1 || normalization.size() != counts.size() || counts.empty())
    throw ValidationError("histogram edges, counts and normalization disagree in size");
  G2Histogram h;
  h.bin_edges_s = std::move(edges_s);
  h.counts = std::move(counts);
  h.normalization = std::move(normalization);
  h.log_spaced = log_spaced;
  h.values.resize(h.size());
  h.sigma.resize(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double norm = h.normalization[i];
    if (!(norm > 0.0) || !std::isfinite(norm)) throw ValidationError("histogram normalization must be positive");
    const auto n = static_cast<double>(h.counts[i]);
    h.values[i] = n / norm;
    h.sigma[i] = h.counts[i] > 0 ? h.values[i] / std::sqrt(n) : 1.0 / norm;
  }
  return h;
}

G2Histogram compute_g2(std::span<const TimeTag> tags, const Binning& binning, const DelayWindow& window,
                       const CorrelatorOptions& options) {
  const std::vector<std::int64_t> edges = histogram_edges_ps(binning, window);
  const ChannelSplit ch = split_channels(tags);
  if (ch.starts.size() < 2 || ch.stops.size() < 2) throw ValidationError("each channel needs at least 2 tags");
  if (ch.starts == ch.stops)
    throw ValidationError("channels 0 and 1 are identical; g2 needs two distinct detectors");

  const std::int64_t begin = std::min(ch.starts.front(), ch.stops.front());
  const std::int64_t end = std::max(ch.starts.back(), ch.stops.back());
  const std::int64_t span = end - begin;
  if (edges.back() >= span) throw ValidationError("delay window exceeds the record span");
  if (options.batches >= 2 && edges.back() >= span / static_cast<std::int64_t>(options.batches))
    throw ValidationError("batch segments are shorter than the delay window");

  // Starts whose whole window fits in the record.
  const auto eligible_end = std::upper_bound(ch.starts.begin(), ch.starts.end(), end - edges.back());
  const auto eligible = static_cast<std::size_t>(eligible_end - ch.starts.begin());
  if (eligible == 0) throw ValidationError("no start tag has a complete delay window");

  const std::size_t nbins = edges.size() - 1;
  const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(1, eligible / 1024));
  std::vector<std::vector<std::uint64_t>> partial(threads, std::vector<std::uint64_t>(nbins, 0));
  const std::span<const std::int64_t> starts(ch.starts.data(), eligible);
  const auto shard = [&](std::size_t k) {
    const std::size_t a = eligible * k / threads;
    const std::size_t b = eligible * (k + 1) / threads;
    correlate_shard(starts.subspan(a, b - a), ch.stops, edges, partial[k]);
  };
  if (threads == 1) {
    shard(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(shard, k);
    for (auto& t : pool) t.join();
  }

  std::vector<std::uint64_t> counts(nbins, 0);
  for (const auto& p : partial)
    for (std::size_t i = 0; i < nbins; ++i) counts[i] += p[i];

  const double stop_rate = static_cast<double>(ch.stops.size()) / static_cast<double>(span);  // per ps
  std::vector<double> norm(nbins), edges_s(nbins + 1);
  for (std::size_t i = 0; i < nbins; ++i)
    norm[i] = static_cast<double>(eligible) * stop_rate * static_cast<double>(edges[i + 1] - edges[i]);
  for (std::size_t i = 0; i <= nbins; ++i) edges_s[i] = static_cast<double>(edges[i]) / kPicosecondsPerSecond;
  G2Histogram h = make_histogram(std::move(edges_s), std::move(counts), std::move(norm),
                                 binning.kind == Binning::Kind::Log);
  if (options.batches >= 2) apply_batch_sigma(h, tags, binning, window, options);
  return h;
}

}  // namespace spinsim
