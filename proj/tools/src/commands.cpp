#include "commands.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "output.hpp"
#include "parallel.hpp"
#include "spinsim/errors.hpp"
#include "spinsim/spin_models.hpp"
#include "spinsim/symmetry.hpp"

namespace spinsim::cli {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Model {
  LevelDiagram diagram;
  RateParameters params;
  ZeroFieldSplitting zfs;

  explicit Model(const RunConfig& c) : diagram(find_diagram(c.diagram)), params(c.params), zfs{1.0, c.e_over_d} {
    validate(c);
  }

  RateMatrix rates(const FieldVector& field) const {
    return build_rate_matrix(diagram, params, triplet_eigensystem(zfs, field));
  }
};

// Cartesian components recomputed from (b, phi) carry ~1e-16 residue on the axes.
double snap(double component, double magnitude) { return std::abs(component) <= 1e-12 * magnitude ? 0.0 : component; }
double field_x(const FieldVector& f) { return snap(f.bx(), f.b()); }
double field_y(const FieldVector& f) { return snap(f.by(), f.b()); }

std::vector<double> grid_axis(double b_max, int grid) {
  if (grid < 1 || grid % 2 == 0) throw ValidationError("grid size must be odd and >= 1");
  if (!std::isfinite(b_max) || b_max < 0.0) throw ValidationError("field range must be finite and >= 0");
  std::vector<double> axis(static_cast<std::size_t>(grid));
  const int half = grid / 2;
  for (int i = 0; i < grid; ++i) axis[static_cast<std::size_t>(i)] = half == 0 ? 0.0 : b_max * (i - half) / half;
  return axis;
}

// Grid rows with by outermost, bx innermost.
std::vector<FieldVector> map_fields(double b_max, int grid, double bz) {
  const auto axis = grid_axis(b_max, grid);
  std::vector<FieldVector> fields;
  for (double by : axis)
    for (double bx : axis) fields.push_back(FieldVector::cartesian(bx, by, bz));
  return fields;
}

std::vector<FieldVector> sweep_fields(const PlMapOptions& o) {
  using Mode = PlMapOptions::Mode;
  if (o.mode == Mode::Map) return map_fields(o.b_max, o.grid, o.bz);
  if (o.points < 2) throw ValidationError("sweeps need at least 2 points");
  std::vector<FieldVector> fields;
  if (o.mode == Mode::Phi) {
    for (int i = 0; i < o.points; ++i) fields.push_back(FieldVector::general(o.b, 2.0 * std::numbers::pi * i / o.points, o.bz));
    return fields;
  }
  if (!std::isfinite(o.b_max) || o.b_max < 0.0) throw ValidationError("field range must be finite and >= 0");
  for (int i = 0; i < o.points; ++i) {
    const double b = o.b_max * i / (o.points - 1);
    fields.push_back(o.along_z ? FieldVector::along_z(b) : FieldVector::in_plane(b, o.phi_deg * kDeg));
  }
  return fields;
}

double parse_double(std::string_view text, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ValidationError("line " + std::to_string(line) + ": cannot parse number '" + std::string(text) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

nlohmann::ordered_json matrix_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::size_t resolve_threads(std::optional<long long> flag) {
  long long n = 1;
  if (flag) {
    n = *flag;
  } else if (const char* env = std::getenv("SPINSIM_THREADS"); env && *env) {
    const std::string_view text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
    if (ec != std::errc() || ptr != text.data() + text.size())
      throw ValidationError("SPINSIM_THREADS must be a positive integer");
  }
  if (n < 1 || n > 4096) throw ValidationError("thread count must be in [1, 4096]");
  return static_cast<std::size_t>(n);
}

std::vector<SteadyPoint> pl_sweep(const RunConfig& config, const PlMapOptions& options) {
  const Model model(config);
  const auto fields = sweep_fields(options);
  const RateMatrix r0 = model.rates(FieldVector{});
  const double pl0 = steady_pl(r0, steady_state(r0));
  return parallel_map<SteadyPoint>(fields.size(), options.threads, [&](std::size_t i) {
    const FieldVector& f = fields[i];
    const RateMatrix r = model.rates(f);
    const PopulationVector x = steady_state(r);
    SteadyPoint p;
    p.bx = field_x(f);
    p.by = field_y(f);
    p.bz = f.bz();
    p.pl = steady_pl(r, x);
    p.pl_variation = pl_variation(p.pl, pl0);
    p.metastable_population = metastable_population(r, x);
    return p;
  });
}

std::string pl_map_csv(const RunConfig& config, const PlMapOptions& options) {
  const auto points = pl_sweep(config, options);
  const bool z = options.mode == PlMapOptions::Mode::Magnitude && options.along_z;
  CsvTable table(z ? std::vector<std::string>{"bz", "pl", "pl_variation", "metastable_population"}
                   : std::vector<std::string>{"bx", "by", "pl", "pl_variation", "metastable_population"});
  for (const auto& p : points) {
    if (z)
      table.add_row({p.bz, p.pl, p.pl_variation, p.metastable_population});
    else
      table.add_row({p.bx, p.by, p.pl, p.pl_variation, p.metastable_population});
  }
  return table.text();
}

std::vector<double> sweep_angles_deg(const G2SimOptions& o) {
  if (!o.phi_deg.empty()) return o.phi_deg;
  if (o.n_phi < 1) throw ValidationError("need at least one angle");
  std::vector<double> phi(static_cast<std::size_t>(o.n_phi));
  for (int i = 0; i < o.n_phi; ++i) phi[static_cast<std::size_t>(i)] = 180.0 * i / o.n_phi;
  return phi;
}

std::vector<G2SweepRow> g2_sweep(const RunConfig& config, const G2SimOptions& o) {
  const Model model(config);
  if (!(o.t_min_s > 0.0) || !(o.t_max_s > o.t_min_s)) throw ValidationError("need 0 < t_min < t_max");
  if (o.points_per_decade < 1) throw ValidationError("points per decade must be >= 1");
  if (!std::isfinite(o.b) || o.b < 0.0) throw ValidationError("field magnitude must be finite and >= 0");
  const auto phis = sweep_angles_deg(o);
  const auto delays = log_delays(o.t_min_s, o.t_max_s, o.points_per_decade);
  const bool fit = o.fit && o.start == G2Start::PostEmission;
  return parallel_map<G2SweepRow>(phis.size(), o.threads, [&](std::size_t i) {
    G2SweepRow row;
    row.phi_deg = phis[i];
    const RateMatrix r = model.rates(FieldVector::general(o.b, phis[i] * kDeg, o.bz));
    row.pl = steady_pl(r, steady_state(r));
    G2Options g2opt;
    g2opt.start = o.start;
    row.curve = simulate_g2(r, delays, g2opt);
    if (fit) row.fit = fit_empirical_order(FitData::from_curve(row.curve), o.order);
    return row;
  });
}

std::string g2_curves_csv(const std::vector<G2SweepRow>& rows) {
  CsvTable table({"phi_deg", "t_s", "g2"});
  for (const auto& row : rows)
    for (std::size_t k = 0; k < row.curve.delays_s.size(); ++k)
      table.add_row({row.phi_deg, row.curve.delays_s[k], row.curve.values[k]});
  return table.text();
}

std::string g2_fits_csv(const std::vector<G2SweepRow>& rows, int order) {
  std::vector<std::string> header{"phi_deg", "pl"};
  for (int k = 1; k <= order; ++k) {
    header.push_back("C" + std::to_string(k));
    header.push_back("tau" + std::to_string(k) + "_s");
  }
  header.push_back("reduced_chi2");
  CsvTable table(header);
  for (const auto& row : rows) {
    if (!row.fit) continue;
    std::vector<double> values{row.phi_deg, row.pl};
    for (int k = 0; k < order; ++k) {
      values.push_back(row.fit->c[static_cast<std::size_t>(k)]);
      values.push_back(row.fit->tau_s[static_cast<std::size_t>(k)]);
    }
    values.push_back(row.fit->reduced_chi2);
    table.add_row(values);
  }
  return table.text();
}

FitData read_histogram_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> t, g, s;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() != 3 || fields[0] != "t_s" || fields[1] != "g2" || fields[2] != "sigma")
        throw ValidationError("histogram CSV must start with header t_s,g2,sigma");
      continue;
    }
    if (fields.size() != 3) throw ValidationError("line " + std::to_string(line_no) + ": expected 3 columns");
    t.push_back(parse_double(fields[0], line_no));
    g.push_back(parse_double(fields[1], line_no));
    s.push_back(parse_double(fields[2], line_no));
  }
  FitData d = FitData::from_points(std::move(t), std::move(g), std::move(s));
  d.validate();
  return d;
}

std::string histogram_csv(const G2Histogram& h) {
  CsvTable table({"t_s", "g2", "sigma"});
  for (std::size_t i = 0; i < h.size(); ++i) table.add_row({h.center(i), h.values[i], h.sigma[i]});
  return table.text();
}

nlohmann::ordered_json fit_report(const FitData& input, const G2FitOptions& options) {
  const FitData data = options.background_rho ? background_correct_curve(input, BackgroundRatio(*options.background_rho)) : input;
  const OrderSelection sel = fit_empirical(data, options.fit);
  const EmpiricalFit& f = sel.best;
  nlohmann::ordered_json doc;
  doc["n"] = f.order;
  doc["C"] = f.c;
  doc["tau_s"] = f.tau_s;
  doc["reduced_chi2"] = f.reduced_chi2;
  doc["covariance"] = matrix_json(f.covariance);
  std::vector<double> c_sigma, tau_sigma;
  for (std::size_t k = 0; k < f.c.size(); ++k) {
    c_sigma.push_back(f.c_sigma(k));
    tau_sigma.push_back(f.tau_sigma(k));
  }
  doc["C_sigma"] = c_sigma;
  doc["tau_sigma_s"] = tau_sigma;
  doc["chi2"] = f.chi2;
  doc["dof"] = f.dof;
  doc["degenerate"] = f.degenerate;
  auto candidates = nlohmann::ordered_json::array();
  for (const auto& c : sel.candidates) candidates.push_back({{"n", c.order}, {"reduced_chi2", c.reduced_chi2}});
  doc["candidates"] = candidates;
  if (options.background_rho) doc["background_rho"] = *options.background_rho;
  if (options.short_delay_s) {
    const ShortDelayFit s = fit_short_delay(data, *options.short_delay_s, options.fit);
    doc["short_delay"] = {{"t_max_s", *options.short_delay_s}, {"C1", s.c1},      {"tau1_s", s.tau1_s},
                          {"C2", s.c2},                        {"g2_0", s.g0()},  {"g2_0_sigma", s.g0_sigma()},
                          {"reduced_chi2", s.reduced_chi2}};
  }
  return doc;
}

std::vector<TimeTag> read_tags_file(const std::string& path, TagFormat format) {
  if (format == TagFormat::Auto) {
    const bool bin = path.size() >= 4 && (path.ends_with(".bin") || path.ends_with(".dat"));
    format = bin ? TagFormat::Binary : TagFormat::Csv;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open tag file " + path);
  return format == TagFormat::Binary ? read_tags_binary(in) : read_tags_csv(in);
}

std::string tags_bytes(const std::vector<TimeTag>& tags, TagFormat format) {
  std::ostringstream out(std::ios::binary);
  if (format == TagFormat::Binary)
    write_tags_binary(out, tags);
  else
    write_tags_csv(out, tags);
  return out.str();
}

nlohmann::ordered_json rates_report(double tau1_s, double tau2_s, double c2, double x) {
  const auto r = estimate_rates_three_level(tau1_s, tau2_s, c2, x);
  nlohmann::ordered_json doc;
  doc["gamma_s_MHz"] = r.gamma_s_mhz;
  doc["gamma_isc1_MHz"] = r.gamma_isc1_mhz;
  doc["gamma_isc2_MHz"] = r.gamma_isc2_mhz;
  return doc;
}

std::string odmr_map_csv(const RunConfig& config, const OdmrOptions& o) {
  const Model model(config);
  const auto fields = map_fields(o.b_max, o.grid, o.bz);
  const auto values = parallel_map<double>(fields.size(), o.threads, [&](std::size_t i) {
    return odmr_pl_variation(model.diagram, model.params, triplet_eigensystem(model.zfs, fields[i]), o.pair,
                             o.gamma_odmr_mhz);
  });
  CsvTable table({"bx", "by", "odmr_pl_variation"});
  for (std::size_t i = 0; i < fields.size(); ++i) table.add_row({field_x(fields[i]), field_y(fields[i]), values[i]});
  return table.text();
}

std::string diagrams_csv() {
  std::string text = "id,ground,letter,variant,class,emission,m_prime_x,m_prime_y,m_prime_z,m_x,m_y,m_z\n";
  for (const LevelDiagram& d : all_level_diagrams()) {
    const auto cls = classify(d);
    text += d.id + ',' + std::string(to_string(d.ground)) + ',' + d.letter + ',' + std::to_string(d.variant) + ',' +
            (cls ? std::string(to_string(*cls)) : std::string("-")) + ',' + std::string(to_string(d.emission));
    for (const SelectionVector* v : {&d.m_prime, &d.m})
      for (std::size_t k = 0; k < 3; ++k) text += ',' + format_number((*v)[k]);
    text += '\n';
  }
  return text;
}

}  // namespace spinsim::cli
