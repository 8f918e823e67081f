#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "commands.hpp"
#include "config.hpp"
#include "manifest.hpp"
#include "output.hpp"
#include "spinsim/errors.hpp"

using namespace spinsim;
using namespace spinsim::cli;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = SPINSIM_FIXTURES_DIR;
const std::string kBinary = SPINSIM_BINARY;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("spinsim_cli_" + std::to_string(std::rand()) + "_" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args, const fs::path& cwd = fs::temp_directory_path()) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" + kBinary + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

RunConfig singlet() { return load_config(kFixtures + "/singlet_ground.json"); }
RunConfig triplet() { return load_config(kFixtures + "/triplet_ground.json"); }

}  // namespace

TEST(Config, FixturesMatchPresets) {
  const RunConfig s = singlet();
  EXPECT_EQ(s, default_config("singlet-b"));
  EXPECT_EQ(triplet(), default_config("triplet-e"));
  EXPECT_DOUBLE_EQ(s.params.gamma_isc1_mhz, 7.7);
}

TEST(Config, RoundTripIsIdentity) {
  RunConfig c = singlet();
  c.e_over_d = -0.1234567890123;
  c.params.epsilon = 1.0 / 3.0 * 0.1;
  c.seed = 18446744073709551615ULL;
  const std::string text = serialize_config(c);
  const RunConfig back = parse_config_text(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize_config(back), text);
}

TEST(Config, MissingKeysFallBackAndUnknownKeysFail) {
  const RunConfig c = parse_config_text(R"({"diagram": "triplet-e", "gamma_e_mhz": 10})");
  EXPECT_DOUBLE_EQ(c.params.gamma_e_mhz, 10.0);
  EXPECT_DOUBLE_EQ(c.params.gamma_isc1_mhz, 33.0);
  EXPECT_THROW(parse_config_text(R"({"gamma_e": 10})"), ValidationError);
  EXPECT_THROW(parse_config_text(R"({"diagram": "triplet-q"})"), ValidationError);
  EXPECT_THROW(parse_config_text(R"({"t1_us": "fifty"})"), ValidationError);
  EXPECT_THROW(parse_config_text("{"), ValidationError);
}

TEST(Config, FlagsOverrideConfig) {
  ConfigOverrides o;
  o.gamma_e_mhz = 5.0;
  o.seed = 9;
  const RunConfig c = resolve_config(kFixtures + "/singlet_ground.json", o);
  EXPECT_DOUBLE_EQ(c.params.gamma_e_mhz, 5.0);
  EXPECT_DOUBLE_EQ(c.params.gamma_s_mhz, 820.0);
  EXPECT_EQ(c.seed, 9u);
  o.gamma_s_mhz = -1.0;
  EXPECT_THROW(resolve_config(std::nullopt, o), ValidationError);
}

TEST(Output, NumberFormatting) {
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(123456789012.0), "1.23456789e+11");
  EXPECT_EQ(format_number(2.0), "2");
  CsvTable t({"a", "b"});
  t.add_row({1.5, -2.25});
  EXPECT_EQ(t.text(), "a,b\n1.5,-2.25\n");
}

TEST(Threads, EnvironmentFallback) {
  ::setenv("SPINSIM_THREADS", "3", 1);
  EXPECT_EQ(resolve_threads(std::nullopt), 3u);
  EXPECT_EQ(resolve_threads(5), 5u);
  ::setenv("SPINSIM_THREADS", "many", 1);
  EXPECT_THROW(resolve_threads(std::nullopt), ValidationError);
  ::unsetenv("SPINSIM_THREADS");
  EXPECT_EQ(resolve_threads(std::nullopt), 1u);
  EXPECT_THROW(resolve_threads(0), ValidationError);
}

TEST(PlMap, GoldenMapsAreReproducedBitExactly) {
  PlMapOptions o;
  o.grid = 21;
  o.b_max = 2.0;
  EXPECT_EQ(pl_map_csv(singlet(), o), slurp(kFixtures + "/golden/pl_map_singlet_b_21.csv"));
  EXPECT_EQ(pl_map_csv(triplet(), o), slurp(kFixtures + "/golden/pl_map_triplet_e_21.csv"));
  OdmrOptions odmr;
  odmr.grid = 21;
  odmr.b_max = 2.0;
  EXPECT_EQ(odmr_map_csv(singlet(), odmr), slurp(kFixtures + "/golden/odmr_map_singlet_b_21.csv"));
}

TEST(PlMap, ThreadCountDoesNotChangeOutput) {
  PlMapOptions o;
  o.grid = 15;
  const std::string one = pl_map_csv(singlet(), o);
  o.threads = 4;
  EXPECT_EQ(pl_map_csv(singlet(), o), one);
}

TEST(PlMap, SingleGridPointIsZeroField) {
  PlMapOptions o;
  o.grid = 1;
  const auto pts = pl_sweep(singlet(), o);
  ASSERT_EQ(pts.size(), 1u);
  const RunConfig c = singlet();
  const RateMatrix r =
      build_rate_matrix(find_diagram(c.diagram), c.params, triplet_eigensystem({1.0, c.e_over_d}, FieldVector{}));
  EXPECT_DOUBLE_EQ(pts[0].pl, steady_pl(r, steady_state(r)));
  EXPECT_EQ(pts[0].pl_variation, 0.0);
}

TEST(PlMap, SingletMinimumAndTripletMaximumAtOrigin) {
  PlMapOptions o;
  o.grid = 21;
  for (const auto& [config, origin_is_min] : {std::pair{singlet(), true}, std::pair{triplet(), false}}) {
    const auto pts = pl_sweep(config, o);
    const SteadyPoint& origin = pts[pts.size() / 2];
    ASSERT_EQ(origin.bx, 0.0);
    ASSERT_EQ(origin.by, 0.0);
    for (const auto& p : pts) {
      if (origin_is_min)
        EXPECT_GE(p.pl, origin.pl * (1 - 1e-12));
      else
        EXPECT_LE(p.pl, origin.pl * (1 + 1e-12));
    }
  }
}

TEST(PlMap, SingletLobesSitOffTheAxes) {
  PlMapOptions o;
  o.mode = PlMapOptions::Mode::Phi;
  o.b = 2.0;
  o.points = 360;
  const auto pts = pl_sweep(singlet(), o);
  const auto best = std::max_element(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.pl < b.pl; });
  const double phi = std::fmod(std::atan2(best->by, best->bx) * 180.0 / M_PI + 360.0, 90.0);
  EXPECT_GT(phi, 10.0);
  EXPECT_LT(phi, 80.0);
}

TEST(PlMap, ZAxisSweepHasFourColumns) {
  PlMapOptions o;
  o.mode = PlMapOptions::Mode::Magnitude;
  o.along_z = true;
  o.points = 3;
  const std::string csv = pl_map_csv(singlet(), o);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "bz,pl,pl_variation,metastable_population");
  o.points = 1;
  EXPECT_THROW(pl_map_csv(singlet(), o), ValidationError);
}

TEST(G2Sim, ZeroFieldFitsAreIdenticalAcrossPhi) {
  G2SimOptions o;
  o.b = 0.0;
  o.n_phi = 4;
  o.t_min_s = 1e-9;
  o.t_max_s = 1e-3;
  const auto rows = g2_sweep(singlet(), o);
  for (const auto& row : rows) {
    ASSERT_TRUE(row.fit);
    EXPECT_EQ(row.curve.values, rows[0].curve.values);
    EXPECT_EQ(row.fit->c, rows[0].fit->c);
  }
}

TEST(G2Sim, SteadyStartGivesFlatCurves) {
  G2SimOptions o;
  o.n_phi = 3;
  o.start = G2Start::SteadyState;
  for (const auto& row : g2_sweep(triplet(), o)) {
    EXPECT_FALSE(row.fit);
    for (double v : row.curve.values) EXPECT_NEAR(v, 1.0, 1e-9);
  }
}

TEST(Correlate, PoissonFixtureIsFlat) {
  const auto tags = read_tags_file(kFixtures + "/tags/poisson.csv", TagFormat::Auto);
  EXPECT_EQ(tags, read_tags_file(kFixtures + "/tags/poisson.bin", TagFormat::Auto));
  const auto h = compute_g2(tags, Binning::linear(1e-7), {0.0, 1e-5});
  double counts = 0, expected = 0, chi2 = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    counts += static_cast<double>(h.counts[i]);
    expected += h.normalization[i];
    chi2 += std::pow(static_cast<double>(h.counts[i]) - h.normalization[i], 2) / h.normalization[i];
  }
  EXPECT_NEAR(counts / expected, 1.0, 0.01);
  // chi2 with 100 dof: 5 sigma is about 100 + 5*sqrt(200).
  EXPECT_LT(chi2, 100.0 + 5.0 * std::sqrt(200.0));
}

TEST(Rates, WorkedExample) {
  const auto doc = rates_report(1.1e-9, 1.4e-6, 5.4, 0.5);
  EXPECT_NEAR(doc["gamma_s_MHz"].get<double>(), 606.0, 6.0);
  EXPECT_NEAR(doc["gamma_isc1_MHz"].get<double>(), 1.81, 0.02);
  EXPECT_NEAR(doc["gamma_isc2_MHz"].get<double>(), 0.112, 0.001);
}

TEST(Odmr, ZeroFieldContrastIsPositive) {
  const std::string csv = odmr_map_csv(singlet(), {});
  const double v = std::stod(csv.substr(csv.rfind(',') + 1));
  EXPECT_GT(v, 0.0);
}

TEST(Histogram, CsvRoundTrip) {
  const auto tags = read_tags_file(kFixtures + "/tags/poisson.csv", TagFormat::Csv);
  const auto h = compute_g2(tags, Binning::log(5), {1e-8, 1e-5});
  const FitData d = read_histogram_csv(histogram_csv(h));
  ASSERT_EQ(d.size(), h.size());
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(d.values[i], h.values[i], 1e-8 * h.values[i]);
  EXPECT_THROW(read_histogram_csv("t,g,s\n1,2,3\n"), ValidationError);
  EXPECT_THROW(read_histogram_csv("t_s,g2,sigma\n1e-9,x,0.1\n"), ValidationError);
}

TEST(Binary, ExitCodes) {
  TempDir tmp;
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("diagrams list -o '" + (tmp.path / "d.csv").string() + "'"), 0);
  EXPECT_EQ(run("pl-map --diagram triplet-z"), 2);
  EXPECT_EQ(run("pl-map --grid 4"), 2);
  EXPECT_EQ(run("pl-map --gamma-e-mhz -3"), 2);
  EXPECT_EQ(run("rates --tau1 1e-9"), 2);
  EXPECT_EQ(run("correlate -i /nonexistent.csv"), 2);
  EXPECT_EQ(run("odmr-map --pair 1,2"), 2);
  EXPECT_EQ(run("nonsense"), 2);
  // A flat histogram has no antibunching dip to fit.
  const fs::path flat = tmp.path / "flat.csv";
  {
    std::ofstream out(flat);
    out << "t_s,g2,sigma\n";
    for (int i = 0; i < 40; ++i) out << 1e-9 * std::pow(10.0, i / 8.0) << ",1,0.01\n";
  }
  EXPECT_EQ(run("g2-fit -i '" + flat.string() + "' --orders 2"), 3);
}

TEST(Binary, DeterministicOutputAndManifest) {
  TempDir tmp;
  const auto a = tmp.path / "a.csv", b = tmp.path / "b.csv";
  ASSERT_EQ(run("pl-map --config '" + kFixtures + "/triplet_ground.json' --grid 5 -o '" + a.string() + "'"), 0);
  ASSERT_EQ(run("pl-map --config '" + kFixtures + "/triplet_ground.json' --grid 5 --threads 3 -o '" + b.string() + "'"),
            0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(slurp(a).find('\r'), std::string::npos);

  const auto manifest = nlohmann::json::parse(slurp(a.string() + ".manifest.json"));
  EXPECT_EQ(manifest["command"], "pl-map");
  EXPECT_EQ(manifest["config"]["diagram"], "triplet-e");
  EXPECT_EQ(manifest["seed"], 1);
  EXPECT_EQ(manifest["outputs"][0]["path"], a.string());
  EXPECT_EQ(manifest["outputs"][0]["fnv1a64"], hex64(fnv1a64(slurp(a))));
  EXPECT_EQ(manifest["config_hash"].get<std::string>().size(), 16u);
  const auto other = nlohmann::json::parse(slurp(b.string() + ".manifest.json"));
  EXPECT_EQ(manifest["config_hash"], other["config_hash"]);
}

TEST(Binary, SameSeedSameTags) {
  TempDir tmp;
  const auto a = tmp.path / "a.bin", b = tmp.path / "b.bin", c = tmp.path / "c.bin";
  const std::string common = "tags-sim --config '" + kFixtures + "/singlet_ground.json' --duration-s 0.0005 --format bin";
  ASSERT_EQ(run(common + " -o '" + a.string() + "'"), 0);
  ASSERT_EQ(run(common + " -o '" + b.string() + "'"), 0);
  ASSERT_EQ(run(common + " --seed 2 -o '" + c.string() + "'"), 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_NE(slurp(a), slurp(c));
}

TEST(Binary, NoImplicitWritesToWorkingDirectory) {
  TempDir cwd;
  ASSERT_EQ(run("pl-map --grid 3", cwd.path), 0);
  ASSERT_EQ(run("rates --tau1 1e-9 --tau2 1e-6 --c2 1 --x 0.5", cwd.path), 0);
  ASSERT_EQ(run("g2-sim --n-phi 2 --curves-out '" + (fs::temp_directory_path() / "spinsim_curves_probe.csv").string() +
                    "' --manifest /dev/null",
                cwd.path),
            0);
  fs::remove(fs::temp_directory_path() / "spinsim_curves_probe.csv");
  EXPECT_TRUE(fs::is_empty(cwd.path));
}
