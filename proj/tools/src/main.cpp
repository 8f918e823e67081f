#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "manifest.hpp"
#include "output.hpp"
#include "spinsim/errors.hpp"
#include "spinsim/estimators.hpp"

using namespace spinsim;
using namespace spinsim::cli;
using json = nlohmann::ordered_json;

namespace {

struct ModelArgs {
  std::optional<std::string> config;
  ConfigOverrides overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON model config")->check(CLI::ExistingFile);
    app->add_option("--diagram", overrides.diagram, "level diagram id (see `diagrams list`)");
    app->add_option("--e-over-d", overrides.e_over_d, "E/D");
    app->add_option("--t1-us", overrides.t1_us, "metastable spin relaxation time T1 (us)");
    app->add_option("--gamma-s-mhz", overrides.gamma_s_mhz, "radiative decay rate (MHz)");
    app->add_option("--gamma-e-mhz", overrides.gamma_e_mhz, "excitation rate (MHz)");
    app->add_option("--gamma-isc1-mhz", overrides.gamma_isc1_mhz, "upper ISC rate (MHz)");
    app->add_option("--gamma-isc2-mhz", overrides.gamma_isc2_mhz, "lower ISC rate (MHz)");
    app->add_option("--epsilon", overrides.epsilon, "ISC selectivity relaxation");
    app->add_option("--seed", overrides.seed, "random seed");
  }

  RunConfig resolve() const { return resolve_config(config, overrides); }
};

struct OutputArgs {
  std::string out;
  std::optional<std::string> manifest;

  void attach(CLI::App* app, const std::string& what = "output file (stdout if omitted)") {
    app->add_option("-o,--out", out, what);
    app->add_option("--manifest", manifest, "manifest path (default: <out>.manifest.json)");
  }
};

std::vector<std::string> arguments(int argc, char** argv) { return {argv, argv + argc}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin-dependent photophysics of quantum emitters: rate models, g2 analysis, estimators"};
  app.set_version_flag("--version", SPINSIM_VERSION);
  app.require_subcommand(1);
  const auto args = arguments(argc, argv);
  std::function<void()> action;

  // diagrams list
  auto* diagrams = app.add_subcommand("diagrams", "symmetry-allowed level diagrams");
  diagrams->require_subcommand(1);
  auto* diagrams_list = diagrams->add_subcommand("list", "list diagrams with class and selection vectors");
  OutputArgs diagrams_out;
  diagrams_out.attach(diagrams_list);
  diagrams_list->callback([&] {
    action = [&] {
      RunManifest m("diagrams list", args);
      m.emit(diagrams_out.out, diagrams_csv());
      m.finish(diagrams_out.manifest);
    };
  });

  // pl-map
  auto* pl = app.add_subcommand("pl-map", "steady-state PL over a field sweep");
  ModelArgs pl_model;
  OutputArgs pl_out;
  PlMapOptions pl_opt;
  std::string pl_mode = "map", pl_axis = "inplane";
  std::optional<long long> pl_threads;
  pl_model.attach(pl);
  pl_out.attach(pl, "CSV output (stdout if omitted)");
  pl->add_option("--mode", pl_mode, "map | phi | magnitude")->check(CLI::IsMember({"map", "phi", "magnitude"}));
  pl->add_option("--b-max", pl_opt.b_max, "field range, units of D/(g muB)");
  pl->add_option("--grid", pl_opt.grid, "grid points per axis (odd)");
  pl->add_option("--b", pl_opt.b, "field magnitude for --mode phi");
  pl->add_option("--points", pl_opt.points, "points for phi / magnitude sweeps");
  pl->add_option("--phi-deg", pl_opt.phi_deg, "in-plane angle for magnitude sweeps");
  pl->add_option("--axis", pl_axis, "magnitude sweep axis: inplane | z")->check(CLI::IsMember({"inplane", "z"}));
  pl->add_option("--bz", pl_opt.bz, "constant out-of-plane field");
  pl->add_option("--threads", pl_threads, "worker threads (default SPINSIM_THREADS or 1)");
  pl->callback([&] {
    action = [&] {
      const RunConfig config = pl_model.resolve();
      pl_opt.mode = pl_mode == "map" ? PlMapOptions::Mode::Map
                    : pl_mode == "phi" ? PlMapOptions::Mode::Phi
                                       : PlMapOptions::Mode::Magnitude;
      pl_opt.along_z = pl_axis == "z";
      pl_opt.threads = resolve_threads(pl_threads);
      RunManifest m("pl-map", args);
      m.set_config(config);
      m.set_parameters({{"mode", pl_mode},     {"b_max", pl_opt.b_max}, {"grid", pl_opt.grid},
                        {"b", pl_opt.b},       {"points", pl_opt.points}, {"phi_deg", pl_opt.phi_deg},
                        {"axis", pl_axis},     {"bz", pl_opt.bz}});
      m.emit(pl_out.out, pl_map_csv(config, pl_opt));
      m.finish(pl_out.manifest);
    };
  });

  // g2-sim
  auto* g2 = app.add_subcommand("g2-sim", "simulated g2 curves and empirical fits over a phi sweep");
  ModelArgs g2_model;
  G2SimOptions g2_opt;
  std::string g2_curves, g2_fits, g2_start = "emission";
  std::optional<std::string> g2_manifest;
  std::optional<long long> g2_threads;
  bool g2_no_fit = false;
  g2_model.attach(g2);
  g2->add_option("--curves-out", g2_curves, "CSV of g2 curves (phi_deg,t_s,g2)")->required();
  g2->add_option("--fits-out", g2_fits, "CSV of empirical fit parameters per phi");
  g2->add_option("--manifest", g2_manifest, "manifest path (default: <curves-out>.manifest.json)");
  g2->add_option("--b", g2_opt.b, "in-plane field magnitude, units of D/(g muB)");
  g2->add_option("--bz", g2_opt.bz, "out-of-plane field");
  g2->add_option("--phi-deg", g2_opt.phi_deg, "explicit angle list")->delimiter(',');
  g2->add_option("--n-phi", g2_opt.n_phi, "number of angles on [0, 180) when --phi-deg is absent");
  g2->add_option("--t-min", g2_opt.t_min_s, "shortest delay (s)");
  g2->add_option("--t-max", g2_opt.t_max_s, "longest delay (s)");
  g2->add_option("--ppd", g2_opt.points_per_decade, "delays per decade");
  g2->add_option("--start", g2_start, "emission | steady (flat control run)")
      ->check(CLI::IsMember({"emission", "steady"}));
  g2->add_option("--order", g2_opt.order, "empirical model order");
  g2->add_flag("--no-fit", g2_no_fit, "skip empirical fits");
  g2->add_option("--threads", g2_threads, "worker threads (default SPINSIM_THREADS or 1)");
  g2->callback([&] {
    action = [&] {
      const RunConfig config = g2_model.resolve();
      g2_opt.start = g2_start == "steady" ? G2Start::SteadyState : G2Start::PostEmission;
      g2_opt.fit = !g2_no_fit && !g2_fits.empty();
      g2_opt.threads = resolve_threads(g2_threads);
      RunManifest m("g2-sim", args);
      m.set_config(config);
      m.set_parameters({{"b", g2_opt.b},
                        {"bz", g2_opt.bz},
                        {"phi_deg", sweep_angles_deg(g2_opt)},
                        {"t_min_s", g2_opt.t_min_s},
                        {"t_max_s", g2_opt.t_max_s},
                        {"points_per_decade", g2_opt.points_per_decade},
                        {"start", g2_start},
                        {"order", g2_opt.order}});
      const auto rows = g2_sweep(config, g2_opt);
      m.emit(g2_curves, g2_curves_csv(rows));
      if (g2_opt.fit) m.emit(g2_fits, g2_fits_csv(rows, g2_opt.order));
      m.finish(g2_manifest);
    };
  });

  // g2-fit
  auto* fit = app.add_subcommand("g2-fit", "fit the empirical multi-exponential model to a histogram");
  std::string fit_in;
  OutputArgs fit_out;
  G2FitOptions fit_opt;
  std::optional<double> fit_short, fit_rho;
  fit->add_option("-i,--in", fit_in, "histogram CSV (t_s,g2,sigma)")->required()->check(CLI::ExistingFile);
  fit_out.attach(fit, "JSON report (stdout if omitted)");
  fit->add_option("--orders", fit_opt.fit.orders, "candidate orders")->delimiter(',');
  fit->add_option("--threshold", fit_opt.fit.improvement_threshold, "relative reduced-chi2 improvement to accept n+1");
  fit->add_option("--restarts", fit_opt.fit.restarts, "jittered restarts per order");
  fit->add_option("--seed", fit_opt.fit.seed, "restart seed");
  fit->add_option("--short-delay", fit_short, "also fit the short-delay form up to this delay (s)");
  fit->add_option("--background-rho", fit_rho, "signal-to-total ratio for background correction");
  fit->callback([&] {
    action = [&] {
      std::ifstream in(fit_in, std::ios::binary);
      std::stringstream buf;
      buf << in.rdbuf();
      fit_opt.short_delay_s = fit_short;
      fit_opt.background_rho = fit_rho;
      RunManifest m("g2-fit", args);
      m.set_seed(fit_opt.fit.seed);
      m.set_parameters({{"input", fit_in},
                        {"orders", fit_opt.fit.orders},
                        {"threshold", fit_opt.fit.improvement_threshold},
                        {"restarts", fit_opt.fit.restarts}});
      const json report = fit_report(read_histogram_csv(buf.str()), fit_opt);
      m.emit(fit_out.out, report.dump(2) + "\n");
      m.finish(fit_out.manifest);
    };
  });

  // correlate
  auto* corr = app.add_subcommand("correlate", "start-stop g2 histogram from time tags");
  std::string corr_in, corr_format = "auto";
  OutputArgs corr_out;
  CorrelateOptions corr_opt;
  std::optional<int> corr_ppd;
  std::optional<double> corr_width;
  std::optional<long long> corr_threads;
  std::size_t corr_batches = 0;
  corr->add_option("-i,--in", corr_in, "tag file (CSV channel,timestamp_ps or binary)")
      ->required()
      ->check(CLI::ExistingFile);
  corr->add_option("--format", corr_format, "auto | csv | bin")->check(CLI::IsMember({"auto", "csv", "bin"}));
  corr_out.attach(corr, "histogram CSV (stdout if omitted)");
  corr->add_option("--ppd", corr_ppd, "log bins per decade (default 10)");
  corr->add_option("--bin-width", corr_width, "linear bin width (s)");
  corr->add_option("--t-min", corr_opt.window.t_min_s, "lower delay edge (s)");
  corr->add_option("--t-max", corr_opt.window.t_max_s, "upper delay edge (s)");
  corr->add_option("--batches", corr_batches,
                   "sigma from the spread over this many time segments (0 = Poisson; use for emitter data)")
      ->check(CLI::NonNegativeNumber);
  corr->add_option("--threads", corr_threads, "worker threads (default SPINSIM_THREADS or 1)");
  corr->callback([&] {
    action = [&] {
      if (corr_ppd && corr_width) throw ValidationError("choose either --ppd or --bin-width");
      corr_opt.binning = corr_width ? Binning::linear(*corr_width) : Binning::log(corr_ppd.value_or(10));
      corr_opt.threads = resolve_threads(corr_threads);
      const TagFormat format = corr_format == "csv" ? TagFormat::Csv
                               : corr_format == "bin" ? TagFormat::Binary
                                                      : TagFormat::Auto;
      RunManifest m("correlate", args);
      m.set_parameters({{"input", corr_in},
                        {"binning", corr_width ? "linear" : "log"},
                        {"bin_width_s", corr_width ? json(*corr_width) : json(nullptr)},
                        {"points_per_decade", corr_width ? json(nullptr) : json(corr_ppd.value_or(10))},
                        {"t_min_s", corr_opt.window.t_min_s},
                        {"t_max_s", corr_opt.window.t_max_s},
                        {"batches", corr_batches}});
      const auto tags = read_tags_file(corr_in, format);
      if (corr_batches == 1) throw ValidationError("--batches needs at least 2 segments");
      const auto h = compute_g2(tags, corr_opt.binning, corr_opt.window, {corr_opt.threads, corr_batches});
      m.emit(corr_out.out, histogram_csv(h));
      m.finish(corr_out.manifest);
    };
  });

  // tags-sim
  auto* tags = app.add_subcommand("tags-sim", "synthetic time-tag stream (Monte Carlo or Poisson)");
  ModelArgs tags_model;
  OutputArgs tags_out;
  double tags_duration = 1.0, tags_b = 0.0, tags_phi = 0.0, tags_bz = 0.0;
  std::vector<double> tags_poisson;
  std::string tags_format = "csv";
  tags_model.attach(tags);
  tags_out.attach(tags, "tag file (stdout if omitted)");
  tags->add_option("--duration-s", tags_duration, "stream duration (s)");
  tags->add_option("--poisson", tags_poisson, "uncorrelated channels with rates R0,R1 (1/s)")
      ->delimiter(',')
      ->expected(2);
  tags->add_option("--b", tags_b, "in-plane field, units of D/(g muB)");
  tags->add_option("--phi-deg", tags_phi, "in-plane field angle");
  tags->add_option("--bz", tags_bz, "out-of-plane field");
  tags->add_option("--format", tags_format, "csv | bin")->check(CLI::IsMember({"csv", "bin"}));
  tags->callback([&] {
    action = [&] {
      const RunConfig config = tags_model.resolve();
      RunManifest m("tags-sim", args);
      m.set_config(config);
      json params{{"duration_s", tags_duration}, {"format", tags_format}};
      std::vector<TimeTag> stream;
      if (!tags_poisson.empty()) {
        params["poisson_hz"] = tags_poisson;
        stream = poisson_stream(tags_poisson[0], tags_poisson[1], tags_duration, config.seed);
      } else {
        params["b"] = tags_b;
        params["phi_deg"] = tags_phi;
        params["bz"] = tags_bz;
        const LevelDiagram d = find_diagram(config.diagram);
        const auto eig = triplet_eigensystem({1.0, config.e_over_d},
                                             FieldVector::general(tags_b, tags_phi * std::numbers::pi / 180.0, tags_bz));
        stream = monte_carlo_stream(build_rate_matrix(d, config.params, eig), tags_duration, config.seed).tags;
      }
      m.set_parameters(params);
      m.emit(tags_out.out, tags_bytes(stream, tags_format == "bin" ? TagFormat::Binary : TagFormat::Csv));
      m.finish(tags_out.manifest);
    };
  });

  // rates
  auto* rates = app.add_subcommand("rates", "three-level rate estimates from fitted g2 parameters");
  double r_tau1 = 0, r_tau2 = 0, r_c2 = 0, r_x = 0;
  OutputArgs rates_out;
  rates->add_option("--tau1", r_tau1, "antibunching time (s)")->required();
  rates->add_option("--tau2", r_tau2, "bunching time (s)")->required();
  rates->add_option("--c2", r_c2, "bunching amplitude")->required();
  rates->add_option("--x", r_x, "saturation parameter Gamma_e/Gamma_s")->required();
  rates_out.attach(rates, "JSON output (stdout if omitted)");
  rates->callback([&] {
    action = [&] {
      RunManifest m("rates", args);
      m.set_parameters({{"tau1_s", r_tau1}, {"tau2_s", r_tau2}, {"c2", r_c2}, {"x", r_x}});
      m.emit(rates_out.out, rates_report(r_tau1, r_tau2, r_c2, r_x).dump(2) + "\n");
      m.finish(rates_out.manifest);
    };
  });

  // odmr-map
  auto* odmr = app.add_subcommand("odmr-map", "PL variation under resonant spin driving");
  ModelArgs odmr_model;
  OutputArgs odmr_out;
  OdmrOptions odmr_opt;
  std::vector<int> odmr_pair{3, 4};
  std::optional<long long> odmr_threads;
  odmr_model.attach(odmr);
  odmr_out.attach(odmr, "CSV output (stdout if omitted)");
  odmr->add_option("--pair", odmr_pair, "driven states i,j (1-based rate-matrix numbering)")
      ->delimiter(',')
      ->expected(2);
  odmr->add_option("--gamma-odmr", odmr_opt.gamma_odmr_mhz, "driving rate (MHz)");
  odmr->add_option("--b-max", odmr_opt.b_max, "field range, units of D/(g muB)");
  odmr->add_option("--grid", odmr_opt.grid, "grid points per axis (odd; 1 = B=0 only)");
  odmr->add_option("--bz", odmr_opt.bz, "out-of-plane field");
  odmr->add_option("--threads", odmr_threads, "worker threads (default SPINSIM_THREADS or 1)");
  odmr->callback([&] {
    action = [&] {
      const RunConfig config = odmr_model.resolve();
      odmr_opt.pair = {odmr_pair[0], odmr_pair[1]};
      odmr_opt.threads = resolve_threads(odmr_threads);
      RunManifest m("odmr-map", args);
      m.set_config(config);
      m.set_parameters({{"pair", odmr_pair},
                        {"gamma_odmr_mhz", odmr_opt.gamma_odmr_mhz},
                        {"b_max", odmr_opt.b_max},
                        {"grid", odmr_opt.grid},
                        {"bz", odmr_opt.bz},
                        {"linewidth_floor_khz", odmr_linewidth_floor_khz(config.params)}});
      m.emit(odmr_out.out, odmr_map_csv(config, odmr_opt));
      m.finish(odmr_out.manifest);
    };
  });

  // estimate
  auto* estimate = app.add_subcommand("estimate", "first-principles order-of-magnitude estimates");
  estimate->require_subcommand(1);
  auto* zfs = estimate->add_subcommand("zfs", "dipolar zero-field splitting from the spin-pair geometry");
  GeometryParams geom;
  double zfs_g = 2.0;
  OutputArgs zfs_out;
  zfs->add_option("--x12", geom.x12, "separation along x (angstrom)")->required();
  zfs->add_option("--y12", geom.y12, "separation along y (angstrom)")->required();
  zfs->add_option("--z12", geom.z12, "separation along z (angstrom)");
  zfs->add_option("--g", zfs_g, "electron g-factor");
  zfs_out.attach(zfs, "JSON output (stdout if omitted)");
  zfs->callback([&] {
    action = [&] {
      const auto z = estimate_zfs(geom, zfs_g);
      RunManifest m("estimate zfs", args);
      m.set_parameters({{"x12_angstrom", geom.x12}, {"y12_angstrom", geom.y12}, {"z12_angstrom", geom.z12}, {"g", zfs_g}});
      m.emit(zfs_out.out, json{{"d_ghz", z.d_ghz}, {"e_ghz", z.e_ghz}}.dump(2) + "\n");
      m.finish(zfs_out.manifest);
    };
  });

  auto* hf = estimate->add_subcommand("hyperfine", "hyperfine tensor for a spin on one nucleus");
  std::string hf_species, hf_orbital;
  double hf_eta = 1.0, hf_g = 2.0;
  std::optional<std::string> hf_table;
  OutputArgs hf_out;
  hf->add_option("--species", hf_species, "nucleus label from the atomic table (e.g. B11, N14)")->required();
  hf->add_option("--orbital", hf_orbital, "pi | sigma")->required();
  hf->add_option("--eta", hf_eta, "spin density on the atom");
  hf->add_option("--g", hf_g, "electron g-factor");
  hf->add_option("--table", hf_table, "atomic parameter JSON")->check(CLI::ExistingFile);
  hf_out.attach(hf, "JSON output (stdout if omitted)");
  hf->callback([&] {
    action = [&] {
      const auto table = hf_table ? load_atomic_table(*hf_table) : default_atomic_table();
      const auto h = hyperfine(find_species(table, hf_species), parse_orbital(hf_orbital, hf_eta), hf_g);
      RunManifest m("estimate hyperfine", args);
      m.set_parameters({{"species", hf_species},
                        {"orbital", hf_orbital},
                        {"eta", hf_eta},
                        {"g", hf_g},
                        {"table", hf_table ? json(*hf_table) : json(nullptr)}});
      m.emit(hf_out.out, json{{"f_mhz", h.f_mhz}, {"d_mhz", h.d_mhz}, {"a_par_mhz", h.a_par_mhz},
                              {"a_perp_mhz", h.a_perp_mhz}}
                                 .dump(2) + "\n");
      m.finish(hf_out.manifest);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (action) action();
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
