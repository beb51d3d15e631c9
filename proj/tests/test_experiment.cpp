#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "pairloc/config.hpp"
#include "pairloc/experiment.hpp"
#include "pairloc/fit.hpp"
#include "pairloc/io.hpp"

using namespace pairloc;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ConfigError parse_error(const std::string& text) {
  try {
    parse_config(text, "test.ini");
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected a config error");
  return ConfigError("", "", 0, "");
}

}  // namespace

TEST_CASE("presets carry the experimental parameters") {
  REQUIRE(presets().size() == 3);
  const auto& s = preset("strong");
  CHECK(s.n_spins == 775);
  CHECK(s.r_bl == 5.0);
  CHECK(s.radii == std::array<double, 3>{59, 34, 30});
  CHECK(s.j_median_mhz == 1.1);
  CHECK(preset("weak").n_spins == 6895);
  CHECK(preset("vdw").law == "vdw-61S62S");
  CHECK_THROWS(preset("medium"));
  const auto g = scaled_cloud(s.radii, 775, 11.2);
  CHECK(g.volume() == doctest::Approx(775 / density_from_wigner_seitz(11.2)));
  CHECK(g.radius_x / g.radius_y == doctest::Approx(59.0 / 34.0));
}

TEST_CASE("field grid") {
  const auto g = default_field_grid(1.0, 3.0, 4, 2);
  REQUIRE(g.size() == 13);
  CHECK(g[6] == 0.0);
  CHECK(g.front() == -3.0);
  CHECK(g.back() == 3.0);
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(g[k] == -g[g.size() - 1 - k]);
  CHECK_THROWS(default_field_grid(0.0, 1.0));
}

TEST_CASE("config parsing") {
  const auto c = parse_config(R"(
[run]
preset = strong
engine = dtwa
seed = 42
[geometry]
n_spins = 6
[sweep]
omegas = -1, 0, 1.5
late_mode = last
[time]
t_max = 2
n_times = 21
[dtwa]
n_traj = 50
)");
  CHECK(c.engine == Engine::Dtwa);
  CHECK(c.seed == 42);
  CHECK(c.n_spins == 6);
  CHECK(c.r_bl == 5.0);
  CHECK(c.omegas == std::vector<double>{-1, 0, 1.5});
  CHECK_FALSE(c.window_mode);
  CHECK(c.times.size() == 21);
  CHECK(c.n_traj == 50);

  const auto back = parse_config(config_to_ini(c));
  CHECK(config_to_ini(back) == config_to_ini(c));
  CHECK(back.law.c_a == c.law.c_a);
  CHECK(back.cloud.radius_x == c.cloud.radius_x);
}

TEST_CASE("config errors name the key and line") {
  auto e = parse_error("[run]\npreset = strong\nseed = abc\n");
  CHECK(e.key() == "run.seed");
  CHECK(e.line() == 3);
  CHECK(std::string(e.what()).find("run.seed") != std::string::npos);

  e = parse_error("[run]\npreset = strong\n[sweep]\nomegaz = 1\n");
  CHECK(e.key() == "sweep.omegaz");
  CHECK(e.line() == 4);

  e = parse_error("[run]\nengine = warp\n");
  CHECK(e.key() == "run.engine");

  e = parse_error("[bogus]\nx = 1\n");
  CHECK(e.key() == "bogus");

  e = parse_error("[run]\npreset = strong\n[interaction]\nc_a = 3\n");
  CHECK(e.key() == "interaction.c_a");

  e = parse_error("[run]\npreset = strong\n[sweep]\nomegas = 1, x\n");
  CHECK(e.key() == "sweep.omegas");

  e = parse_error("[run\npreset = strong\n");
  CHECK(e.line() == 1);

  CHECK_THROWS_AS(parse_config("[run]\npreset = strong\nengine = ed\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/file.ini"), ConfigError);
}

TEST_CASE("late-time value") {
  std::vector<double> t, v;
  for (int k = 0; k <= 100; ++k) {
    t.push_back(0.1 * k);
    v.push_back(k);
  }
  CHECK(late_time_value(t, v, 10.0, false) == 100.0);
  // Window (9, 10] holds samples 90..100.
  CHECK(late_time_value(t, v, 10.0, true) == doctest::Approx(95.0));
  CHECK(late_time_value(t, v, 5.0, true, 0.2) == doctest::Approx(45.0));
  CHECK_THROWS(late_time_value(t, v, 10.05, true));
}

TEST_CASE("stretched-exponential fit") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> noise(0.0, 1e-3);
  std::vector<double> t, v;
  for (int k = 0; k <= 100; ++k) {
    t.push_back(0.1 * k);
    v.push_back(stretched_exponential(t.back(), 0.1, 1.0, 0.6) + noise(rng));
  }
  const auto f = fit_stretched_exponential(t, v);
  CHECK(f.m_inf == doctest::Approx(0.1).epsilon(0.05));
  CHECK(f.tau == doctest::Approx(1.0).epsilon(0.05));
  CHECK(f.beta_s == doctest::Approx(0.6).epsilon(0.05));
  CHECK(f.residual < 2e-3);

  std::vector<double> e;
  for (const double x : t) e.push_back(0.05 + 0.45 * std::exp(-x / 2.0));
  const auto g = fit_stretched_exponential(t, e);
  CHECK(std::abs(g.beta_s - 1.0) < 1e-2);
  CHECK(g.tau == doctest::Approx(2.0).epsilon(1e-3));

  std::vector<double> flat(t.size(), 0.5);
  CHECK_THROWS_AS(fit_stretched_exponential(t, flat), DegenerateFitError);
  std::vector<double> few_t = {0, 1, 2}, few_v = {0.5, 0.3, 0.2};
  CHECK_THROWS(fit_stretched_exponential(few_t, few_v));
}

TEST_CASE("relaxation runs: start value and spin locking") {
  auto c = config_from_preset("strong");
  c.n_spins = 6;
  c.engine = Engine::Ed;
  c.omegas = {0.0, 11.0};
  c.times = uniform_times(10.0, 101);
  c.n_realizations = 3;
  const auto r = run_relaxation(c);
  REQUIRE(r.traces.size() == 2);
  CHECK(r.failures.empty());
  for (const auto& tr : r.traces) CHECK(tr.mean[0] == doctest::Approx(0.5));
  CHECK(std::abs(r.traces[0].mean.back()) < 0.5);
  for (std::size_t k = 1; k < c.times.size(); ++k) CHECK(r.traces[1].mean[k] > 0.4);
  CHECK(r.j_median.size() == 3);
}

TEST_CASE("pair sweep: single pair passthrough and reproducible CSV") {
  ExperimentConfig c;
  c.cloud.radius_x = c.cloud.radius_y = c.cloud.radius_z = 3.0;
  c.n_spins = 2;
  c.law = dipolar_48s48p();
  c.engine = Engine::PairGge;
  c.omegas = {-4, -1, 0, 1, 4};
  c.seed = 5;
  const auto s = run_field_sweep(c);
  const auto pos = sample_realization(c, 0);
  const double j = pair_coupling(pos.points[0], pos.points[1], c.law) / 4 * (c.law.delta - 1);
  for (const auto& row : s.rows) CHECK(row.m_late == doctest::Approx(pairs::pair_diagonal_sx(j, row.omega)));

  auto d = config_from_preset("strong");
  d.n_spins = 60;
  d.n_realizations = 4;
  d.omegas = {-1, -0.5, 0, 0.5, 1};
  const auto dir = std::filesystem::temp_directory_path() / "pairloc_test_csv";
  std::filesystem::create_directories(dir);
  d.workers = 1;
  io::write_sweep_csv(dir / "a.csv", run_field_sweep(d));
  d.workers = 3;
  io::write_sweep_csv(dir / "b.csv", run_field_sweep(d));
  const std::string a = slurp(dir / "a.csv");
  CHECK(a == slurp(dir / "b.csv"));
  CHECK(a.rfind("omega_mhz,m_late,m_stderr,engine,n_ok\n", 0) == 0);
  const auto sweep = run_field_sweep(d);
  for (const auto& row : sweep.rows) {
    CHECK(row.m_stderr >= 0.0);
    CHECK(sweep.rows[2].m_late <= row.m_late);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("disorder-average error falls with the number of realizations") {
  auto c = config_from_preset("strong");
  c.n_spins = 40;
  c.engine = Engine::PairDiagonal;
  c.omegas = {0.5};
  c.n_realizations = 16;
  const double e16 = run_field_sweep(c).rows[0].m_stderr;
  c.n_realizations = 256;
  const double e256 = run_field_sweep(c).rows[0].m_stderr;
  CHECK(e16 / e256 == doctest::Approx(4.0).epsilon(0.35));
}

TEST_CASE("number formatting round-trips") {
  for (const double x : {0.1, 1.0 / 3.0, -2.5e-17, 12345.678}) CHECK(std::stod(io::format_number(x)) == x);
}
