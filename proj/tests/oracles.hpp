#pragma once

// Reference implementations used only by tests: dense Pauli-product
// Hamiltonians in the lab s_z basis, brute-force matching and friends.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;

// Spin-½ operator `op` on site i of n (bit i of the index is site i;
// bit 0 = up).
inline Mat site_op(const Eigen::Matrix2cd& op, int i, int n) {
  const int dim = 1 << n;
  Mat out = Mat::Zero(dim, dim);
  for (int col = 0; col < dim; ++col) {
    const int b = (col >> i) & 1;
    for (int a = 0; a < 2; ++a) {
      const cd v = op(a, b);
      if (v == cd(0.0)) continue;
      const int row = (col & ~(1 << i)) | (a << i);
      out(row, col) += v;
    }
  }
  return out;
}

inline Eigen::Matrix2cd sx() {
  Eigen::Matrix2cd m;
  m << 0, 0.5, 0.5, 0;
  return m;
}
inline Eigen::Matrix2cd sy() {
  Eigen::Matrix2cd m;
  m << 0, cd(0, -0.5), cd(0, 0.5), 0;
  return m;
}
inline Eigen::Matrix2cd sz() {
  Eigen::Matrix2cd m;
  m << 0.5, 0, 0, -0.5;
  return m;
}

// ½Σ_{i≠j} J_ij (sx sx + sy sy + δ sz sz) + Ω Σ sx, lab s_z basis.
inline Mat lab_hamiltonian(const Eigen::MatrixXd& J, double delta, double omega) {
  const int n = static_cast<int>(J.rows());
  const int dim = 1 << n;
  Mat h = Mat::Zero(dim, dim);
  for (int i = 0; i < n; ++i) {
    h += omega * site_op(sx(), i, n);
    for (int j = i + 1; j < n; ++j)
      h += J(i, j) * (site_op(sx(), i, n) * site_op(sx(), j, n) +
                      site_op(sy(), i, n) * site_op(sy(), j, n) +
                      delta * site_op(sz(), i, n) * site_op(sz(), j, n));
  }
  return h;
}

inline Mat total_sx(int n) {
  const int dim = 1 << n;
  Mat s = Mat::Zero(dim, dim);
  for (int i = 0; i < n; ++i) s += site_op(sx(), i, n);
  return s / static_cast<double>(n);
}

inline Eigen::VectorXcd x_polarized(int n) {
  const int dim = 1 << n;
  return Eigen::VectorXcd::Constant(dim, cd(std::pow(2.0, -0.5 * n), 0.0));
}

// <S_x>(t) by dense diagonalization, t in μs, H in MHz.
inline std::vector<double> sx_trace(const Mat& h, int n, const std::vector<double>& times) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  const Eigen::VectorXcd c = es.eigenvectors().adjoint() * x_polarized(n);
  const Mat s = total_sx(n);
  std::vector<double> out;
  for (const double t : times) {
    Eigen::VectorXcd phase(c.size());
    for (Eigen::Index k = 0; k < c.size(); ++k)
      phase(k) = std::exp(cd(0, -2.0 * std::numbers::pi * es.eigenvalues()(k) * t)) * c(k);
    const Eigen::VectorXcd psi = es.eigenvectors() * phase;
    out.push_back(psi.dot(s * psi).real());
  }
  return out;
}

// Minimum total distance over all perfect matchings (recursive enumeration).
inline double brute_force_matching(const Eigen::MatrixXd& d) {
  const int n = static_cast<int>(d.rows());
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  std::function<double(int)> rec = [&](int remaining) -> double {
    if (remaining == 0) return 0.0;
    int i = 0;
    while (used[static_cast<std::size_t>(i)]) ++i;
    used[static_cast<std::size_t>(i)] = true;
    double best = std::numeric_limits<double>::infinity();
    for (int j = i + 1; j < n; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      used[static_cast<std::size_t>(j)] = true;
      best = std::min(best, d(i, j) + rec(remaining - 2));
      used[static_cast<std::size_t>(j)] = false;
    }
    used[static_cast<std::size_t>(i)] = false;
    return best;
  };
  return rec(n);
}

// Composite Simpson rule on [a, b] with n (even) intervals.
template <class F>
double simpson(F&& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return s * h / 3.0;
}

// Root of a continuous f on [a, b] with a sign change, by bisection.
template <class F>
double bisect(F&& f, double a, double b, int iters = 200) {
  double fa = f(a);
  for (int k = 0; k < iters; ++k) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace oracle
