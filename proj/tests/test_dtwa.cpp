#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pairloc/dtwa.hpp"
#include "pairloc/parallel.hpp"

using namespace pairloc;

namespace {

CouplingMatrix random_couplings(int n, double delta, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  CouplingMatrix c;
  c.delta = delta;
  c.J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) c.J(i, j) = c.J(j, i) = u(rng);
  return c;
}

}  // namespace

TEST_CASE("initial Wigner samples") {
  const auto s = dtwa::sample_initial_spins(7, 3);
  for (int i = 0; i < 7; ++i) {
    CHECK(s(i, 0) == 0.5);
    CHECK(std::abs(s(i, 1)) == 0.5);
    CHECK(std::abs(s(i, 2)) == 0.5);
  }
  // Transverse covariance of |→⟩: diag(¼, ¼), zero mean.
  const int n_samples = 100000;
  double my = 0, mz = 0, yy = 0, zz = 0, yz = 0;
  for (int k = 0; k < n_samples; ++k) {
    const auto c = dtwa::sample_initial_spins(1, dtwa::trajectory_seed(11, k));
    my += c(0, 1);
    mz += c(0, 2);
    yy += c(0, 1) * c(0, 1);
    zz += c(0, 2) * c(0, 2);
    yz += c(0, 1) * c(0, 2);
  }
  my /= n_samples;
  mz /= n_samples;
  const double sigma_mean = 0.5 / std::sqrt(n_samples);
  CHECK(std::abs(my) < 3 * sigma_mean);
  CHECK(std::abs(mz) < 3 * sigma_mean);
  CHECK(yy / n_samples == doctest::Approx(0.25));
  CHECK(zz / n_samples == doctest::Approx(0.25));
  CHECK(std::abs(yz / n_samples) < 3 * 0.25 / std::sqrt(n_samples));
}

TEST_CASE("single spin: fixed point and Larmor precession") {
  CouplingMatrix c;
  c.J = Eigen::MatrixXd::Zero(1, 1);
  const double omega = 0.7;
  std::vector<double> t;
  for (int k = 0; k <= 30; ++k) t.push_back(0.1 * k);

  dtwa::ClassicalSpinConfig along(1, 3);
  along << 0.5, 0, 0;
  for (const auto& s : dtwa::evolve_trajectory(c, omega, along, t)) {
    CHECK(s(0, 0) == doctest::Approx(0.5));
    CHECK(std::abs(s(0, 1)) < 1e-14);
  }

  dtwa::ClassicalSpinConfig perp(1, 3);
  perp << 0, 0.5, 0;
  const auto traj = dtwa::evolve_trajectory(c, omega, perp, t, 1e-10);
  for (std::size_t k = 0; k < t.size(); ++k)
    CHECK(std::abs(traj[k](0, 1) - 0.5 * std::cos(2 * std::numbers::pi * omega * t[k])) < 1e-8);
}

TEST_CASE("two-spin XX trajectory converges under tolerance refinement") {
  CouplingMatrix c;
  c.delta = 0.0;
  c.J = Eigen::MatrixXd::Zero(2, 2);
  c.J(0, 1) = c.J(1, 0) = 1.3;
  dtwa::ClassicalSpinConfig s0(2, 3);
  s0 << 0.5, 0.5, 0.5, 0.5, -0.5, -0.5;
  std::vector<double> t;
  for (int k = 0; k <= 50; ++k) t.push_back(0.2 * k);
  const auto a = dtwa::evolve_trajectory(c, 0.0, s0, t, 1e-8);
  const auto b = dtwa::evolve_trajectory(c, 0.0, s0, t, 1e-11);
  for (std::size_t k = 0; k < t.size(); ++k) CHECK((a[k] - b[k]).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("per-trajectory conservation laws") {
  const int n = 12;
  const auto c = random_couplings(n, -0.7, 21);
  std::vector<double> t;
  for (int k = 0; k <= 50; ++k) t.push_back(0.2 * k);
  for (const double omega : {0.0, 0.5}) {
    const auto s0 = dtwa::sample_initial_spins(n, 99);
    const auto traj = dtwa::evolve_trajectory(c, omega, s0, t);
    const double e0 = dtwa::classical_energy(c, omega, s0);
    const double scale = std::max(std::abs(e0), 0.125 * c.J.cwiseAbs().sum() + std::abs(omega) * n / 2);
    const double sz0 = s0.col(2).sum();
    for (const auto& s : traj) {
      CHECK(std::abs(dtwa::classical_energy(c, omega, s) - e0) / scale < 1e-6);
      for (int i = 0; i < n; ++i) CHECK(std::abs(s.row(i).norm() - std::sqrt(3.0) / 2) < 1e-6);
      if (omega == 0.0) CHECK(std::abs(s.col(2).sum() - sz0) < 1e-6);
    }
  }
}

TEST_CASE("ensemble: starts at one half, reproducible, worker independent") {
  const auto c = random_couplings(8, 0.0, 5);
  std::vector<double> t = {0.0, 0.5, 1.0, 2.0};
  dtwa::DtwaOptions one;
  one.workers = 1;
  dtwa::DtwaOptions four;
  four.workers = 4;
  const auto a = dtwa::dtwa_magnetization(c, 0.2, 100, t, 17, one);
  const auto b = dtwa::dtwa_magnetization(c, 0.2, 100, t, 17, four);
  CHECK(a.sx_mean[0] == 0.5);
  CHECK(a.sx_stderr[0] == 0.0);
  for (std::size_t k = 0; k < t.size(); ++k) {
    CHECK(a.sx_mean[k] == b.sx_mean[k]);
    CHECK(a.sx_stderr[k] == b.sx_stderr[k]);
    CHECK(std::abs(a.sx_mean[k]) <= 0.5);
  }
  CHECK(a.worst.max_energy_drift < 1e-6);
  CHECK_THROWS(dtwa::dtwa_magnetization(c, 0.2, 1, t, 17));
  std::vector<double> bad = {1.0, 0.5};
  CHECK_THROWS(dtwa::dtwa_magnetization(c, 0.2, 10, bad, 17));
}

TEST_CASE("single spin ensemble stays at one half") {
  CouplingMatrix c;
  c.J = Eigen::MatrixXd::Zero(1, 1);
  std::vector<double> t = {0.0, 1.0, 5.0};
  const auto r = dtwa::dtwa_magnetization(c, 1.1, 200, t, 3);
  for (const double m : r.sx_mean) CHECK(m == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("relabeling spins leaves the mean unchanged within noise") {
  const int n = 6;
  const auto c = random_couplings(n, 0.0, 31);
  CouplingMatrix p = c;
  const std::vector<int> perm = {5, 3, 1, 0, 2, 4};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p.J(i, j) = c.J(perm[i], perm[j]);
  std::vector<double> t = {0.0, 1.0, 2.0};
  const auto a = dtwa::dtwa_magnetization(c, 0.0, 2000, t, 1);
  const auto b = dtwa::dtwa_magnetization(p, 0.0, 2000, t, 2);
  for (std::size_t k = 0; k < t.size(); ++k)
    CHECK(std::abs(a.sx_mean[k] - b.sx_mean[k]) < 4 * std::hypot(a.sx_stderr[k], b.sx_stderr[k]) + 1e-12);
}

TEST_CASE("Monte Carlo error falls as n_traj^-1/2") {
  const auto c = random_couplings(6, 0.0, 8);
  std::vector<double> t = {0.0, 1.5};
  dtwa::DtwaOptions fast;
  fast.tol = 1e-6;
  const auto a = dtwa::dtwa_magnetization(c, 0.0, 100, t, 4, fast);
  const auto b = dtwa::dtwa_magnetization(c, 0.0, 1000, t, 4, fast);
  const auto d = dtwa::dtwa_magnetization(c, 0.0, 10000, t, 4, fast);
  const double r1 = a.sx_stderr[1] / b.sx_stderr[1];
  const double r2 = b.sx_stderr[1] / d.sx_stderr[1];
  CHECK(r1 == doctest::Approx(std::sqrt(10.0)).epsilon(0.25));
  CHECK(r2 == doctest::Approx(std::sqrt(10.0)).epsilon(0.1));
}

TEST_CASE("parallel helpers") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 3);
  for (const int h : hits) CHECK(h == 1);
  CHECK_THROWS(parallel_for(10, [](std::size_t i) { if (i == 7) throw std::runtime_error("x"); }, 2));
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  const std::vector<double> v = {1e16, 1.0, -1e16, 1.0};
  CHECK(compensated_sum(v) == 2.0);
}

TEST_CASE("single-precision field agrees with the double-precision ensemble") {
  const auto c = random_couplings(60, -0.7, 13);
  const auto t = std::vector<double>{0.0, 0.5, 1.0, 2.0, 4.0};
  dtwa::DtwaOptions exact;
  dtwa::DtwaOptions fast;
  fast.tol = 1e-6;
  fast.single_precision_field = true;
  const auto a = dtwa::dtwa_magnetization(c, 0.3, 200, t, 6, exact);
  const auto b = dtwa::dtwa_magnetization(c, 0.3, 200, t, 6, fast);
  for (std::size_t k = 0; k < t.size(); ++k) CHECK(std::abs(a.sx_mean[k] - b.sx_mean[k]) < 0.01);
  CHECK(b.worst.max_energy_drift < 1e-4);
}

TEST_CASE("step size underflow is reported") {
  const auto c = random_couplings(4, 0.0, 2);
  dtwa::DtwaOptions o;
  o.tol = 1e-14;
  o.min_step = 0.1;
  const std::vector<double> t = {0.0, 5.0};
  CHECK_THROWS_AS(dtwa::dtwa_magnetization(c, 0.0, 4, t, 1, o), dtwa::TrajectoryError);
}
