#include "pairloc/pair_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <numbers>

#include <Eigen/LU>
#include <boost/math/tools/roots.hpp>

#include "pairloc/matching.hpp"
#include "pairloc/parallel.hpp"

namespace pairloc::pairs {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Ω/R with the free-spin convention Ω/R → 1 at R = 0.
double field_ratio(double omega, double R) { return R > 0.0 ? omega / R : 1.0; }
}  // namespace

PairSpectrum pair_spectrum(double J, double delta, double omega) {
  PairSpectrum s;
  s.J = J;
  s.delta = delta;
  s.omega = omega;
  s.j = J * (delta - 1.0);
  s.R = std::hypot(omega, s.j);
  const double c = field_ratio(omega, s.R);
  s.eigenvalues = {J * delta, -J * (2.0 + delta), J - s.R, J + s.R};
  s.occupations = {0.0, 0.0, 0.5 - 0.5 * c, 0.5 + 0.5 * c};
  s.magnetizations = {0.0, 0.0, -0.5 * c, 0.5 * c};
  return s;
}

Eigen::Matrix4d appendix_pair_matrix(double J, double delta, double omega) {
  Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
  h(0, 0) = J + omega;
  h(1, 1) = -J;
  h(2, 2) = -J;
  h(3, 3) = J - omega;
  h(0, 3) = h(3, 0) = J * (delta - 1.0);
  h(1, 2) = h(2, 1) = J * (delta + 1.0);
  return h;
}

double pair_diagonal_sx(double j, double omega) {
  const double r2 = omega * omega + j * j;
  if (r2 == 0.0) return 0.5;
  return omega * omega / (2.0 * r2);
}

double uniform_disorder_average(double delta_j, double omega) {
  if (!(delta_j > 0.0)) throw std::domain_error("uniform_disorder_average: delta_j must be > 0");
  if (omega == 0.0) return 0.0;
  const double a = std::abs(omega);
  return a / (2.0 * delta_j) * std::atan(delta_j / a);
}

double canonical_pair_sx(double j, double h, double beta) {
  const double R = std::hypot(h, j);
  if (R == 0.0) return 0.0;
  if (std::isinf(beta)) return -h / (2.0 * R) * (beta > 0 ? 1.0 : -1.0);
  return -h / (2.0 * R) * std::tanh(R * beta);
}

double single_pair_beta(double j, double h) {
  const double R = std::hypot(h, j);
  if (h == 0.0) return 0.0;
  if (std::abs(h) >= R) return h > 0.0 ? -kInf : kInf;
  return std::atanh(-h / R) / R;
}

double solve_beta(std::span<const double> R, double target) {
  double rsum = 0.0, rmax = 0.0;
  for (const double r : R) {
    rsum += r;
    rmax = std::max(rmax, r);
  }
  if (rsum == 0.0) {
    if (target == 0.0) return 0.0;
    throw NoRootError("energy balance has no root: all pair splittings vanish");
  }
  if (target == 0.0) return 0.0;
  if (target >= rsum) return kInf;
  if (target <= -rsum) return -kInf;

  auto f = [&](double beta) {
    double s = 0.0;
    for (const double r : R) s += r * std::tanh(r * beta);
    return s - target;
  };
  // f is increasing; grow a one-sided bracket from the origin.
  const double sign = target > 0.0 ? 1.0 : -1.0;
  double lo = 0.0, hi = sign / rmax;
  double fhi = f(hi);
  int grow = 0;
  while (sign * fhi < 0.0) {
    lo = hi;
    hi *= 2.0;
    fhi = f(hi);
    if (++grow > 2000) throw NoRootError("energy balance: bracket search failed");
  }
  double a = std::min(lo, hi), b = std::max(lo, hi);
  if (f(a) == 0.0) return a;
  if (f(b) == 0.0) return b;
  std::uintmax_t iters = 200;
  auto [x0, x1] = boost::math::tools::toms748_solve(
      f, a, b, boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (x0 + x1);
}

std::size_t PairDecomposition::n_spins() const {
  std::size_t n = 0;
  for (std::size_t p = 0; p < size(); ++p) n += static_cast<std::size_t>(spins_in(p));
  return n;
}

PairDecomposition PairDecomposition::rescaled(double factor) const {
  if (!(factor > 0.0)) throw std::invalid_argument("rescale factor must be > 0");
  PairDecomposition out = *this;
  for (auto& v : out.j) v *= factor;
  for (auto& v : out.J) v *= factor;
  out.inter *= factor;
  out.rescale *= factor;
  return out;
}

MatchingMethod matching_method_from_string(const std::string& s) {
  if (s == "auto") return MatchingMethod::Auto;
  if (s == "exact") return MatchingMethod::Exact;
  if (s == "greedy") return MatchingMethod::Greedy;
  throw std::invalid_argument("unknown matching method '" + s + "' (auto|exact|greedy)");
}

PairDecomposition decompose(const std::vector<std::array<int, 2>>& members,
                            const CouplingMatrix& couplings) {
  const auto n = couplings.size();
  std::vector<int> owner(static_cast<std::size_t>(n), -1);
  for (std::size_t p = 0; p < members.size(); ++p)
    for (const int i : members[p]) {
      if (i < 0) continue;
      if (i >= n || owner[static_cast<std::size_t>(i)] >= 0)
        throw std::invalid_argument("pairing is not a partition of the spins");
      owner[static_cast<std::size_t>(i)] = static_cast<int>(p);
    }
  if (std::any_of(owner.begin(), owner.end(), [](int o) { return o < 0; }))
    throw std::invalid_argument("pairing leaves spins unassigned");

  PairDecomposition d;
  d.members = members;
  d.delta = couplings.delta;
  const auto np = static_cast<Eigen::Index>(members.size());
  d.J.resize(members.size());
  d.j.resize(members.size());
  for (std::size_t p = 0; p < members.size(); ++p) {
    const auto [a, b] = members[p];
    d.J[p] = b < 0 ? 0.0 : couplings.J(a, b) / 4.0;
    d.j[p] = d.J[p] * (couplings.delta - 1.0);
  }
  d.inter = Eigen::MatrixXd::Zero(np, np);
  for (Eigen::Index a = 0; a < n; ++a) {
    const int p = owner[static_cast<std::size_t>(a)];
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const int q = owner[static_cast<std::size_t>(b)];
      if (p == q) continue;
      const double v = couplings.J(a, b);
      if (std::abs(v) > std::abs(d.inter(p, q))) d.inter(p, q) = d.inter(q, p) = v;
    }
  }
  return d;
}

PairDecomposition match_pairs(const SpinPositions& positions, const CouplingMatrix& couplings,
                              const MatchOptions& options) {
  const auto n = static_cast<int>(positions.points.size());
  if (n < 2) throw std::invalid_argument("match_pairs needs at least 2 spins");
  if (couplings.size() != n) throw std::invalid_argument("positions and couplings differ in size");

  std::vector<int> active;
  int singleton = -1;
  if (n % 2 == 1) {
    double weakest = kInf;
    for (int i = 0; i < n; ++i) {
      const double strongest = couplings.J.row(i).cwiseAbs().maxCoeff();
      if (strongest < weakest) {
        weakest = strongest;
        singleton = i;
      }
    }
  }
  for (int i = 0; i < n; ++i)
    if (i != singleton) active.push_back(i);

  const auto m = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd dist(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      dist(a, b) = (positions.points[static_cast<std::size_t>(active[a])] -
                    positions.points[static_cast<std::size_t>(active[b])])
                       .norm();

  bool exact = options.method == MatchingMethod::Exact ||
               (options.method == MatchingMethod::Auto &&
                active.size() <= options.exact_limit);
  const auto mate = exact ? matching::min_distance_perfect_matching(dist)
                          : matching::greedy_matching(dist);

  std::vector<std::array<int, 2>> members;
  for (Eigen::Index a = 0; a < m; ++a) {
    const int b = mate[static_cast<std::size_t>(a)];
    if (b > a) members.push_back({active[a], active[b]});
  }
  if (singleton >= 0) members.push_back({singleton, -1});
  return decompose(members, couplings);
}

namespace {

Eigen::VectorXd spin_weights(const PairDecomposition& pairs) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t p = 0; p < pairs.size(); ++p) w(static_cast<Eigen::Index>(p)) = pairs.spins_in(p);
  return w;
}

double weighted_mean(const Eigen::VectorXd& m, const Eigen::VectorXd& w) {
  return m.dot(w) / w.sum();
}

// One fixed-point map m -> F(m) and its bookkeeping (β for canonical).
using FixedPointMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&, double coupling_scale,
                                                    double& beta)>;

// Jacobian of m - F(m, λ) with respect to (m, λ), n x (n + 1).
using JacobianMap = std::function<Eigen::MatrixXd(const Eigen::VectorXd& m, double coupling_scale)>;

struct IterationResult {
  Eigen::VectorXd m;
  double beta = 0.0;
  double residual = kInf;
  std::size_t iterations = 0;
  bool converged = false;
};

IterationResult damped_iteration(const FixedPointMap& F, Eigen::VectorXd m, double scale,
                                 double alpha, const MeanFieldOptions& opt) {
  IterationResult r;
  double checkpoint = kInf;
  for (std::size_t it = 1; it <= opt.max_iter; ++it) {
    double beta = 0.0;
    const Eigen::VectorXd fm = F(m, scale, beta);
    r.residual = (fm - m).cwiseAbs().maxCoeff();
    r.iterations = it;
    r.beta = beta;
    if (!std::isfinite(r.residual)) break;
    if (r.residual < opt.tol) {
      r.m = fm;
      r.converged = true;
      return r;
    }
    // An oscillating iteration gains nothing from the remaining budget.
    if (it % 1000 == 0) {
      if (r.residual > 0.5 * checkpoint) break;
      checkpoint = r.residual;
    }
    m = (1.0 - alpha) * m + alpha * fm;
  }
  r.m = m;
  return r;
}

// Newton at full coupling with a backtracking line search on |m - F(m)|,
// projected onto the physical box [0, 1/2]^n.
IterationResult newton_polish(const FixedPointMap& F, const JacobianMap& jacobian,
                              Eigen::VectorXd m, const MeanFieldOptions& opt) {
  const Eigen::Index n = m.size();
  IterationResult r;
  std::size_t evals = 0;
  auto residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& fx, double& beta) {
    ++evals;
    fx = F(x, 1.0, beta);
    return Eigen::VectorXd(x - fx);
  };
  Eigen::VectorXd fm;
  double beta = 0.0;
  Eigen::VectorXd g = residual(m, fm, beta);
  for (int it = 0; it < 60 && g.allFinite(); ++it) {
    if (g.cwiseAbs().maxCoeff() < opt.tol) {
      r.m = fm;
      r.beta = beta;
      r.residual = g.cwiseAbs().maxCoeff();
      r.converged = true;
      r.iterations = evals;
      return r;
    }
    const Eigen::VectorXd step = jacobian(m, 1.0).leftCols(n).partialPivLu().solve(g);
    const double norm = g.norm();
    double a = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 30; ++ls, a *= 0.5) {
      const Eigen::VectorXd trial = (m - a * step).cwiseMax(0.0).cwiseMin(0.5);
      Eigen::VectorXd ft;
      double bt = 0.0;
      const Eigen::VectorXd gt = residual(trial, ft, bt);
      if (gt.allFinite() && gt.norm() < (1.0 - 1e-4 * a) * norm) {
        m = trial;
        fm = ft;
        g = gt;
        beta = bt;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  r.m = m;
  r.residual = g.cwiseAbs().maxCoeff();
  r.iterations = evals;
  return r;
}

// Pseudo-arclength continuation of m - F(m, λ) = 0 from the decoupled
// solution at λ = 0 to λ = 1. Following the path through folds keeps the
// root on the branch connected to the decoupled one; F maps the box
// [0, 1/2]^n into itself, so the path cannot escape before reaching λ = 1.
IterationResult arclength_homotopy(const FixedPointMap& F, const JacobianMap& analytic,
                                   const Eigen::VectorXd& decoupled, const MeanFieldOptions& opt) {
  const Eigen::Index n = decoupled.size();
  std::size_t evals = 0;
  auto H = [&](const Eigen::VectorXd& y) {
    double beta = 0.0;
    ++evals;
    return Eigen::VectorXd(y.head(n) - F(y.head(n), y(n), beta));
  };
  // Jacobian of H, n x (n + 1); forward differences unless the map has one.
  auto jacobian = [&](const Eigen::VectorXd& y, const Eigen::VectorXd& hy) {
    if (analytic) return analytic(y.head(n), y(n));
    Eigen::MatrixXd D(n, n + 1);
    for (Eigen::Index k = 0; k <= n; ++k) {
      Eigen::VectorXd yk = y;
      const double eps = 1e-7 * std::max(1.0, std::abs(y(k)));
      yk(k) += eps;
      D.col(k) = (H(yk) - hy) / eps;
    }
    return D;
  };
  auto tangent = [&](const Eigen::MatrixXd& D, const Eigen::VectorXd& previous) {
    Eigen::MatrixXd A(n + 1, n + 1);
    A.topRows(n) = D;
    A.row(n) = previous.transpose();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs(n) = 1.0;
    const Eigen::VectorXd t = A.partialPivLu().solve(rhs);
    return Eigen::VectorXd(t.normalized());
  };

  IterationResult r;
  Eigen::VectorXd y(n + 1);
  y << decoupled, 0.0;
  Eigen::VectorXd t = Eigen::VectorXd::Unit(n + 1, n);
  double ds = 0.01;
  // Tangent and corrector factorization at y; rejected steps reuse them.
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  bool fresh = false;
  // A path that keeps folding without pushing λ higher is wandering among
  // near-degenerate branches; give up instead of spending the full budget.
  double lambda_best = 0.0;
  int step_best = 0;
  for (int step = 0; step < 20000 && ds > 1e-9 && step - step_best < 2500; ++step) {
    if (!fresh) {
      const Eigen::MatrixXd D = jacobian(y, H(y));
      t = tangent(D, t);
      Eigen::MatrixXd A(n + 1, n + 1);
      A.topRows(n) = D;
      A.row(n) = t.transpose();
      lu.compute(A);
      fresh = true;
    }
    // Chord-Newton corrector on the hyperplane orthogonal to t through the
    // predictor, reusing the Jacobian from y.
    Eigen::VectorXd z = y + ds * t;
    bool ok = false;
    for (int it = 0; it < 15; ++it) {
      const Eigen::VectorXd hz = H(z);
      if (!hz.allFinite()) break;
      const double offset = t.dot(z - y) - ds;
      if (hz.cwiseAbs().maxCoeff() < 1e-10 && std::abs(offset) < 1e-10) {
        ok = true;
        break;
      }
      Eigen::VectorXd g(n + 1);
      g << hz, offset;
      z -= lu.solve(g);
    }
    if (!ok || (z - y).norm() > 1.2 * ds || z(n) < 0.0) {
      ds *= 0.5;
      continue;
    }
    if (z(n) >= 1.0) {
      // Crossed λ = 1: Newton in m alone from the interpolated point.
      const double f = (1.0 - y(n)) / (z(n) - y(n));
      Eigen::VectorXd m = y.head(n) + f * (z.head(n) - y.head(n));
      for (int it = 0; it < 30; ++it) {
        Eigen::VectorXd ym(n + 1);
        ym << m, 1.0;
        const Eigen::VectorXd hm = H(ym);
        if (hm.cwiseAbs().maxCoeff() < 0.1 * opt.tol) break;
        m -= jacobian(ym, hm).leftCols(n).partialPivLu().solve(hm);
      }
      double beta = 0.0;
      const Eigen::VectorXd fm = F(m, 1.0, beta);
      r.m = fm;
      r.beta = beta;
      r.residual = (fm - m).cwiseAbs().maxCoeff();
      r.converged = std::isfinite(r.residual) && r.residual < opt.tol;
      break;
    }
    if (z(n) > lambda_best) {
      lambda_best = z(n);
      step_best = step;
    }
    y = z;
    fresh = false;
    ds = std::min(0.05, 1.5 * ds);
  }
  r.iterations = evals;
  return r;
}

MeanFieldSolution solve_fixed_point(const PairDecomposition& pairs, double omega,
                                    const MeanFieldOptions& opt, const FixedPointMap& F,
                                    const JacobianMap& jacobian = {}) {
  if (!(opt.damping > 0.0 && opt.damping <= 1.0))
    throw std::invalid_argument("damping must lie in (0, 1]");
  if (!(opt.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const auto np = static_cast<Eigen::Index>(pairs.size());

  double beta0 = 0.0;
  const Eigen::VectorXd decoupled = F(Eigen::VectorXd::Zero(np), 0.0, beta0);

  std::size_t total = 0;
  IterationResult r = damped_iteration(F, decoupled, 1.0, opt.damping, opt);
  total += r.iterations;
  if (!r.converged) {
    r = damped_iteration(F, decoupled, 1.0, opt.damping * 0.2, opt);
    total += r.iterations;
  }
  if (!r.converged && jacobian) {
    // Polish the fixed point the stalled iteration is circling.
    r = newton_polish(F, jacobian, r.m, opt);
    total += r.iterations;
  }
  if (!r.converged) {
    r = arclength_homotopy(F, jacobian, decoupled, opt);
    total += r.iterations;
  }
  if (!r.converged)
    throw ConvergenceError("mean-field iteration did not converge at Omega = " +
                               std::to_string(omega) + " MHz (residual " +
                               std::to_string(r.residual) + ")",
                           r.residual);

  MeanFieldSolution sol;
  sol.m = r.m;
  sol.field = Eigen::VectorXd::Constant(np, omega) + pairs.inter * r.m;
  sol.beta = r.beta;
  sol.residual = r.residual;
  sol.iterations = total;
  sol.mean = weighted_mean(sol.m, spin_weights(pairs));
  return sol;
}

}  // namespace

MeanFieldSolution solve_mean_field(const PairDecomposition& pairs, double omega,
                                   const MeanFieldOptions& options) {
  FixedPointMap F = [&](const Eigen::VectorXd& m, double scale, double& beta) {
    beta = 0.0;
    const Eigen::VectorXd h = Eigen::VectorXd::Constant(m.size(), omega) + scale * (pairs.inter * m);
    Eigen::VectorXd out(m.size());
    for (Eigen::Index p = 0; p < m.size(); ++p)
      out(p) = pair_diagonal_sx(pairs.j[static_cast<std::size_t>(p)], h(p));
    return out;
  };
  JacobianMap D = [&](const Eigen::VectorXd& m, double scale) {
    const Eigen::Index n = m.size();
    const Eigen::VectorXd pull = pairs.inter * m;
    Eigen::MatrixXd out(n, n + 1);
    out.leftCols(n) = -scale * pairs.inter;
    for (Eigen::Index p = 0; p < n; ++p) {
      // d/dh of ½h²/(h²+j²) is h j²/(h²+j²)².
      const double h = omega + scale * pull(p), j = pairs.j[static_cast<std::size_t>(p)];
      const double den = h * h + j * j;
      const double slope = den > 0.0 ? h * j * j / (den * den) : 0.0;
      out.row(p) *= slope;
      out(p, n) = -slope * pull(p);
    }
    out.leftCols(n).diagonal().array() += 1.0;
    return out;
  };
  return solve_fixed_point(pairs, omega, options, F, D);
}

MeanFieldSolution solve_canonical_mean_field(const PairDecomposition& pairs, double omega,
                                             const MeanFieldOptions& options) {
  const Eigen::VectorXd w = spin_weights(pairs);
  const Eigen::VectorXd row_sums = pairs.inter.rowwise().sum();
  std::vector<double> R(pairs.size());
  FixedPointMap F = [&, row_sums](const Eigen::VectorXd& m, double scale, double& beta) {
    const Eigen::VectorXd pull = scale * (pairs.inter * m);
    const Eigen::VectorXd h = Eigen::VectorXd::Constant(m.size(), omega) + pull;
    // Total energy in pair units: each pair's canonical energy -R tanh(Rβ)
    // (J_p offsets cancel) minus half of the bond energy double counted by
    // the effective fields; the initial state has m = ½ everywhere.
    double target = 0.0;
    for (Eigen::Index p = 0; p < m.size(); ++p) {
      const double n_p = w(p);
      const auto ps = static_cast<std::size_t>(p);
      R[ps] = n_p == 2.0 ? std::hypot(h(p), pairs.j[ps]) : 0.5 * std::abs(h(p));
      target -= n_p * (0.5 * omega + 0.125 * scale * row_sums(p) + 0.5 * m(p) * pull(p));
    }
    beta = solve_beta(R, target);
    Eigen::VectorXd out(m.size());
    for (Eigen::Index p = 0; p < m.size(); ++p) {
      const auto ps = static_cast<std::size_t>(p);
      if (w(p) == 2.0) {
        out(p) = canonical_pair_sx(pairs.j[ps], h(p), beta);
      } else {
        const double x = 0.5 * h(p) * beta;
        out(p) = std::isnan(x) ? 0.0 : -0.5 * std::tanh(x);
      }
    }
    return out;
  };
  return solve_fixed_point(pairs, omega, options, F);
}

double solve_global_beta(const PairDecomposition& pairs, double omega) {
  std::vector<double> R(pairs.size());
  double target = 0.0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const bool pair = pairs.spins_in(p) == 2;
    R[p] = pair ? std::hypot(omega, pairs.j[p]) : 0.5 * std::abs(omega);
    target -= pair ? omega : 0.5 * omega;
  }
  return solve_beta(R, target);
}

std::string to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::Diagonal: return "diagonal";
    case EnsembleKind::GgeMeanField: return "gge-meanfield";
    case EnsembleKind::CanonicalGlobal: return "canonical-global";
  }
  return "?";
}

EnsembleKind ensemble_kind_from_string(const std::string& s) {
  if (s == "diagonal") return EnsembleKind::Diagonal;
  if (s == "gge-meanfield" || s == "gge") return EnsembleKind::GgeMeanField;
  if (s == "canonical-global" || s == "canonical") return EnsembleKind::CanonicalGlobal;
  throw std::invalid_argument("unknown ensemble '" + s +
                              "' (diagonal|gge-meanfield|canonical-global)");
}

std::vector<SweepPoint> ensemble_field_sweep(const PairDecomposition& pairs,
                                             std::span<const double> omegas, EnsembleKind kind,
                                             double rescale, const MeanFieldOptions& options,
                                             std::size_t workers) {
  for (const double om : omegas)
    if (!std::isfinite(om)) throw std::invalid_argument("field grid must be finite");
  const PairDecomposition scaled = pairs.rescaled(rescale);
  const Eigen::VectorXd w = spin_weights(scaled);
  std::vector<SweepPoint> out(omegas.size());
  parallel_for(
      omegas.size(),
      [&](std::size_t k) {
        SweepPoint& pt = out[k];
        pt.omega = omegas[k];
        try {
          switch (kind) {
            case EnsembleKind::Diagonal: {
              Eigen::VectorXd m(static_cast<Eigen::Index>(scaled.size()));
              for (std::size_t p = 0; p < scaled.size(); ++p)
                m(static_cast<Eigen::Index>(p)) = pair_diagonal_sx(scaled.j[p], pt.omega);
              pt.m = weighted_mean(m, w);
              break;
            }
            case EnsembleKind::GgeMeanField: {
              const auto sol = solve_mean_field(scaled, pt.omega, options);
              pt.m = sol.mean;
              pt.residual = sol.residual;
              pt.iterations = sol.iterations;
              break;
            }
            case EnsembleKind::CanonicalGlobal: {
              const auto sol = solve_canonical_mean_field(scaled, pt.omega, options);
              pt.m = sol.mean;
              pt.beta = sol.beta;
              pt.residual = sol.residual;
              pt.iterations = sol.iterations;
              break;
            }
          }
        } catch (const std::exception& e) {
          pt.ok = false;
          pt.m = std::numeric_limits<double>::quiet_NaN();
          pt.error = e.what();
        }
      },
      workers);
  return out;
}

}  // namespace pairloc::pairs
