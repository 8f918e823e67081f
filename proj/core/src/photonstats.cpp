#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "spinsim/errors.hpp"
#include "spinsim/photonstats.hpp"

namespace spinsim {

BackgroundRatio::BackgroundRatio(double rho) : rho_(rho) {
  if (!std::isfinite(rho) || rho <= 0.0 || rho > 1.0) throw ValidationError("background ratio rho must lie in (0, 1]");
}

BackgroundRatio BackgroundRatio::from_amplitudes(double c, double c_corrected) {
  if (!(c > 0.0) || !(c_corrected >= c) || !std::isfinite(c_corrected))
    throw ValidationError("need 0 < C <= C_corrected to infer rho");
  return BackgroundRatio(std::sqrt(c / c_corrected));
}

double background_correct_amplitude(double c, BackgroundRatio rho) {
  return c / (rho.value() * rho.value());
}

EmpiricalFit background_correct_amplitudes(const EmpiricalFit& fit, BackgroundRatio rho) {
  const double s = 1.0 / (rho.value() * rho.value());
  EmpiricalFit out = fit;
  for (double& c : out.c) c *= s;
  Eigen::VectorXd jac = Eigen::VectorXd::Ones(out.covariance.rows());
  for (Eigen::Index k = 0; k < jac.size(); k += 2) jac(k) = s;
  if (out.covariance.size() > 0) out.covariance = jac.asDiagonal() * out.covariance * jac.asDiagonal();
  return out;
}

double background_correct_value(double g2, BackgroundRatio rho) {
  const double r2 = rho.value() * rho.value();
  return (g2 - (1.0 - r2)) / r2;
}

double background_restore_value(double g2_corrected, BackgroundRatio rho) {
  const double r2 = rho.value() * rho.value();
  return r2 * g2_corrected + (1.0 - r2);
}

G2Histogram background_correct_curve(const G2Histogram& h, BackgroundRatio rho) {
  G2Histogram out = h;
  const double r2 = rho.value() * rho.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values[i] = background_correct_value(h.values[i], rho);
    out.sigma[i] = h.sigma[i] / r2;
  }
  return out;
}

FitData background_correct_curve(const FitData& d, BackgroundRatio rho) {
  FitData out = d;
  const double r2 = rho.value() * rho.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values[i] = background_correct_value(d.values[i], rho);
    out.sigma[i] = d.sigma[i] / r2;
  }
  // Corrected values are no longer Poisson counts over the normalization.
  out.normalization.clear();
  return out;
}

FitData background_restore_curve(const FitData& d, BackgroundRatio rho) {
  FitData out = d;
  const double r2 = rho.value() * rho.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values[i] = background_restore_value(d.values[i], rho);
    out.sigma[i] = d.sigma[i] * r2;
  }
  out.normalization.clear();
  return out;
}

ThreeLevelRates estimate_rates_three_level(double tau1_s, double tau2_s, double c2, double x) {
  for (double v : {tau1_s, tau2_s, c2, x})
    if (!std::isfinite(v) || v < 0.0) throw ValidationError("three-level inputs must be finite and non-negative");
  if (!(tau1_s > 0.0) || !(tau2_s > 0.0) || !(x > 0.0))
    throw ValidationError("tau1, tau2 and x must be positive");
  constexpr double kMhzPerHz = 1.0e-6;
  const double gamma_s = 1.0 / tau1_s / (1.0 + x);
  const double gamma_isc2 = 1.0 / tau2_s / (1.0 + c2);
  const double gamma_isc1 = (1.0 + x) / x * (1.0 / tau2_s - gamma_isc2);
  return {gamma_s * kMhzPerHz, gamma_isc1 * kMhzPerHz, gamma_isc2 * kMhzPerHz};
}

namespace {

template <class T>
T parse_field(std::string_view text, std::size_t line, const char* what) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ValidationError("line " + std::to_string(line) + ": bad " + what + " '" + std::string(text) + "'");
  return value;
}

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (std::size_t k = 0; k < 8; ++k) bytes[k] = static_cast<char>((v >> (8 * k)) & 0xffu);
  out.write(bytes.data(), 8);
}

bool get_u64(std::istream& in, std::uint64_t& v) {
  std::array<unsigned char, 8> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), 8)) return false;
  v = 0;
  for (std::size_t k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
  return true;
}

}  // namespace

std::vector<TimeTag> read_tags_csv(std::istream& in) {
  std::vector<TimeTag> tags;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ValidationError("line " + std::to_string(number) + ": expected 'channel,timestamp_ps'");
    const std::string_view view(line);
    if (tags.empty() && number == 1 && view.substr(0, comma) == "channel") continue;
    const auto channel = parse_field<unsigned>(view.substr(0, comma), number, "channel");
    const auto ts = parse_field<std::int64_t>(view.substr(comma + 1), number, "timestamp");
    if (channel > 1) throw ValidationError("line " + std::to_string(number) + ": channel must be 0 or 1");
    if (ts < 0) throw ValidationError("line " + std::to_string(number) + ": negative timestamp");
    tags.push_back({static_cast<std::uint8_t>(channel), ts});
  }
  return tags;
}

std::vector<TimeTag> read_tags_binary(std::istream& in) {
  std::uint64_t count = 0;
  if (!get_u64(in, count)) throw ValidationError("binary tag stream is missing its record count");
  std::vector<TimeTag> tags;
  tags.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
  for (std::uint64_t k = 0; k < count; ++k) {
    char channel = 0;
    std::uint64_t ts = 0;
    if (!in.get(channel) || !get_u64(in, ts)) throw ValidationError("binary tag stream is truncated");
    if (static_cast<unsigned char>(channel) > 1) throw ValidationError("binary tag stream has a channel other than 0/1");
    if (ts > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
      throw ValidationError("binary timestamp out of range");
    tags.push_back({static_cast<std::uint8_t>(channel), static_cast<std::int64_t>(ts)});
  }
  if (in.peek() != std::char_traits<char>::eof()) throw ValidationError("binary tag stream has trailing bytes");
  return tags;
}

void write_tags_csv(std::ostream& out, std::span<const TimeTag> tags) {
  out << "channel,timestamp_ps\n";
  for (const TimeTag& t : tags) out << static_cast<unsigned>(t.channel) << ',' << t.timestamp_ps << '\n';
}

void write_tags_binary(std::ostream& out, std::span<const TimeTag> tags) {
  put_u64(out, tags.size());
  for (const TimeTag& t : tags) {
    out.put(static_cast<char>(t.channel));
    put_u64(out, static_cast<std::uint64_t>(t.timestamp_ps));
  }
}

}  // namespace spinsim
