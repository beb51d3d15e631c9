#include "pairloc/fit.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

namespace pairloc {

double stretched_exponential(double t, double m_inf, double tau, double beta_s) {
  return m_inf + (0.5 - m_inf) * std::exp(-std::pow(t / tau, beta_s));
}

namespace {

double beta_from(double v) { return 2.0 / (1.0 + std::exp(-v)); }

struct Residuals {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  std::span<const double> t;
  std::span<const double> y;

  int inputs() const { return 3; }
  int values() const { return static_cast<int>(t.size()); }

  // x = (m_inf, log τ, logit-like coordinate of β_s / 2).
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
    const double tau = std::exp(x(1));
    const double b = beta_from(x(2));
    for (std::size_t k = 0; k < t.size(); ++k)
      r(static_cast<Eigen::Index>(k)) = stretched_exponential(t[k], x(0), tau, b) - y[k];
    return 0;
  }
};

}  // namespace

StretchedExpFit fit_stretched_exponential(std::span<const double> times_us,
                                          std::span<const double> values) {
  if (times_us.size() != values.size()) throw std::invalid_argument("times and values differ in length");
  if (times_us.size() < 8) throw std::invalid_argument("stretched-exponential fit needs >= 8 points");
  for (std::size_t k = 0; k < times_us.size(); ++k)
    if (!std::isfinite(times_us[k]) || !std::isfinite(values[k]) || times_us[k] < 0.0)
      throw std::invalid_argument("fit input must be finite with t >= 0");

  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*hi - *lo < 1e-6) throw DegenerateFitError("trace is flat: no decay to fit");

  // Start: plateau from the last tenth, τ at the half-way crossing, β_s = 1.
  const std::size_t n = values.size();
  const std::size_t tail = std::max<std::size_t>(1, n / 10);
  double m0 = 0.0;
  for (std::size_t k = n - tail; k < n; ++k) m0 += values[k];
  m0 /= static_cast<double>(tail);
  if (std::abs(0.5 - m0) < 1e-6) throw DegenerateFitError("trace does not decay from 1/2");
  const double half = 0.5 * (0.5 + m0);
  double tau0 = times_us.back() / 3.0;
  for (std::size_t k = 1; k < n; ++k)
    if ((values[k] - half) * (values[0] - half) <= 0.0 && times_us[k] > 0.0) {
      tau0 = times_us[k];
      break;
    }

  Residuals f{times_us, values};
  Eigen::NumericalDiff<Residuals> df(f);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<Residuals>> lm(df);
  lm.parameters.maxfev = 4000;
  lm.parameters.xtol = 1e-12;
  lm.parameters.ftol = 1e-14;
  Eigen::VectorXd x(3);
  x << m0, std::log(tau0), 0.0;
  const auto status = lm.minimize(x);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters)
    throw FitError("stretched-exponential fit: improper input");
  if (!x.allFinite()) throw FitError("stretched-exponential fit diverged");

  StretchedExpFit out;
  out.m_inf = x(0);
  out.tau = std::exp(x(1));
  out.beta_s = beta_from(x(2));
  Eigen::VectorXd r(static_cast<Eigen::Index>(n));
  f(x, r);
  out.residual = std::sqrt(r.squaredNorm() / static_cast<double>(n));
  out.iterations = static_cast<int>(lm.iter);
  if (!(out.tau > 0.0) || !std::isfinite(out.tau)) throw FitError("fit produced invalid tau");
  if (status == Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation)
    throw FitError("stretched-exponential fit did not converge");
  return out;
}

}  // namespace pairloc
