#pragma once

#include <span>
#include <stdexcept>

namespace pairloc {

/// M(t) = m_inf + (½ - m_inf) exp(-(t/τ)^β_s).
struct StretchedExpFit {
  double m_inf = 0.0;
  double tau = 0.0;     // μs
  double beta_s = 0.0;  // in (0, 2]
  double residual = 0.0;  // RMS of the residuals
  int iterations = 0;
};

class DegenerateFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double stretched_exponential(double t, double m_inf, double tau, double beta_s);

/// Least squares (Levenberg-Marquardt) over m_inf, log τ and a logistic
/// coordinate for β_s. Needs >= 8 points; flat input raises DegenerateFitError.
StretchedExpFit fit_stretched_exponential(std::span<const double> times_us,
                                          std::span<const double> values);

}  // namespace pairloc
