#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pairloc/couplings.hpp"
#include "pairloc/geometry.hpp"

namespace pairloc::pairs {

// Two-spin problem in the rotated pair frame: field along the pair axis,
// basis {→→, →←, ←→, ←←}, J = J12/4, j = J(Δ-1), R = sqrt(Ω² + j²).
struct PairSpectrum {
  double J = 0.0;
  double delta = 0.0;
  double omega = 0.0;
  double j = 0.0;
  double R = 0.0;
  // Order: symmetric dark JΔ, antisymmetric dark -J(2+Δ), bright J-R, bright J+R.
  std::array<double, 4> eigenvalues{};
  std::array<double, 4> occupations{};     // |<→→|ψ_i>|²
  std::array<double, 4> magnetizations{};  // per-spin <S_x> of ψ_i
};

PairSpectrum pair_spectrum(double J, double delta, double omega);

/// The 4×4 pair Hamiltonian in the rotated frame (numerical cross-check).
Eigen::Matrix4d appendix_pair_matrix(double J, double delta, double omega);

/// Time-averaged per-spin magnetization of an isolated pair: Ω²/(2(Ω²+j²)).
/// j = Ω = 0 returns ½.
double pair_diagonal_sx(double j, double omega);

/// Average of pair_diagonal_sx over j uniform in [0, delta_j].
double uniform_disorder_average(double delta_j, double omega);

/// Per-spin canonical magnetization of a pair in field h at inverse
/// temperature β (1/MHz): -h/(2R) tanh(Rβ).
double canonical_pair_sx(double j, double h, double beta);

/// β solving -R tanh(Rβ) = h for a single pair; ±inf when |h| = R.
double single_pair_beta(double j, double h);

/// Root of Σ_p R_p tanh(R_p β) = target. Monotone in β, so the root is
/// unique; |target| >= Σ R_p gives ±inf.
double solve_beta(std::span<const double> R, double target);

class NoRootError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PairDecomposition {
  // members[p] = {i, k} or {i, -1} for a singleton.
  std::vector<std::array<int, 2>> members;
  std::vector<double> J;  // J_ik / 4
  std::vector<double> j;  // J_p (Δ - 1); 0 for singletons
  Eigen::MatrixXd inter;  // strongest cross coupling J_ab, sign kept
  double delta = 0.0;
  double rescale = 1.0;

  std::size_t size() const { return j.size(); }
  int spins_in(std::size_t p) const { return members[p][1] < 0 ? 1 : 2; }
  std::size_t n_spins() const;
  /// Copy with j and inter multiplied by `factor` (rescale accumulates).
  PairDecomposition rescaled(double factor) const;
};

enum class MatchingMethod { Auto, Exact, Greedy };

struct MatchOptions {
  MatchingMethod method = MatchingMethod::Auto;
  std::size_t exact_limit = 200;  // Auto: blossom up to this many spins
};

MatchingMethod matching_method_from_string(const std::string& s);

/// Minimum total-distance pairing (one singleton for odd N: the spin whose
/// strongest coupling is weakest). Couplings give j_p and J^inter.
PairDecomposition match_pairs(const SpinPositions& positions, const CouplingMatrix& couplings,
                              const MatchOptions& options = {});

/// Decomposition for a prescribed pairing.
PairDecomposition decompose(const std::vector<std::array<int, 2>>& members,
                            const CouplingMatrix& couplings);

struct MeanFieldOptions {
  double damping = 0.5;
  double tol = 1e-10;
  std::size_t max_iter = 10'000;
};

struct MeanFieldSolution {
  Eigen::VectorXd m;      // per-spin magnetization of each pair
  Eigen::VectorXd field;  // effective field Ω_p (MHz)
  double beta = 0.0;      // global β (canonical only)
  double residual = 0.0;  // max-norm of m - F(m)
  std::size_t iterations = 0;
  double mean = 0.0;  // spin-weighted average of m
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Self-consistent pair magnetizations m_p = ½h_p²/(h_p²+j_p²) with
/// h_p = Ω + Σ_q J^inter_pq m_q. Damped iteration from the decoupled solution;
/// falls back to heavier damping and then continuation in the inter-pair
/// coupling strength before giving up.
MeanFieldSolution solve_mean_field(const PairDecomposition& pairs, double omega,
                                   const MeanFieldOptions& options = {});

/// Canonical magnetizations at one global β fixed by total mean-field energy,
/// with the same effective fields. Each inter-pair bond energy is split half
/// and half between its two pairs.
MeanFieldSolution solve_canonical_mean_field(const PairDecomposition& pairs, double omega,
                                             const MeanFieldOptions& options = {});

/// Global β for isolated pairs in field Ω (no mean field).
double solve_global_beta(const PairDecomposition& pairs, double omega);

enum class EnsembleKind { Diagonal, GgeMeanField, CanonicalGlobal };

std::string to_string(EnsembleKind kind);
EnsembleKind ensemble_kind_from_string(const std::string& s);

struct SweepPoint {
  double omega = 0.0;
  double m = 0.0;
  double beta = 0.0;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool ok = true;
  std::string error;
};

/// Late-time magnetization vs Ω. `rescale` multiplies j_p and J^inter.
/// Failed points are returned with ok = false and m = NaN.
std::vector<SweepPoint> ensemble_field_sweep(const PairDecomposition& pairs,
                                             std::span<const double> omegas, EnsembleKind kind,
                                             double rescale = 1.0,
                                             const MeanFieldOptions& options = {},
                                             std::size_t workers = 0);

}  // namespace pairloc::pairs
