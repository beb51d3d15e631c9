#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "pairloc/couplings.hpp"

namespace pairloc::dtwa {

/// N×3 classical spin components (columns x, y, z).
using ClassicalSpinConfig = Eigen::Matrix<double, Eigen::Dynamic, 3>;

struct DtwaOptions {
  double tol = 1e-8;            // relative (and absolute, in units of |s|) tolerance
  std::size_t batch_size = 16;  // trajectories integrated together
  std::size_t workers = 0;      // 0: default_worker_count()
  double min_step = 1e-12;      // μs
  // Field product J·s in single precision (about 2.5x faster for N ~ 10³).
  // Adds relative field errors of order 1e-7·sqrt(N); only sensible with
  // tol >= 1e-6.
  bool single_precision_field = false;
};

/// Raised when the adaptive step drops below DtwaOptions::min_step.
class StepSizeUnderflow : public std::runtime_error {
 public:
  StepSizeUnderflow(double time_us, double step_us);
  double time_us() const { return time_; }

 private:
  double time_;
};

/// Integrator failure tagged with the trajectory it occurred in.
class TrajectoryError : public std::runtime_error {
 public:
  TrajectoryError(std::size_t trajectory, const std::string& what);
  std::size_t trajectory() const { return trajectory_; }

 private:
  std::size_t trajectory_;
};

/// Discrete Wigner sample of |→⟩^N: s_x = +½, s_y and s_z independent ±½.
ClassicalSpinConfig sample_initial_spins(std::size_t n_spins, std::uint64_t seed);

/// Seed of trajectory `index` in a run with base seed `seed`.
std::uint64_t trajectory_seed(std::uint64_t seed, std::size_t index);

/// Classical energy Σ_{i<j} J_ij (sx sx + sy sy + δ sz sz) + Ω Σ sx, MHz.
double classical_energy(const CouplingMatrix& couplings, double omega,
                        const ClassicalSpinConfig& spins);

/// Integrates ds_i/dt = 2π B_i × s_i (embedded Runge-Kutta 7(8), error
/// control on every component) with
/// B_i = (Ω + Σ_j J_ij s_j^x, Σ_j J_ij s_j^y, δ Σ_j J_ij s_j^z).
/// Returns the configuration at every requested time (sorted, >= 0).
std::vector<ClassicalSpinConfig> evolve_trajectory(const CouplingMatrix& couplings, double omega,
                                                   const ClassicalSpinConfig& initial,
                                                   std::span<const double> times_us,
                                                   double tol = 1e-8);

struct TrajectoryDiagnostics {
  double max_energy_drift = 0.0;  // relative to max(|E0|, Σ|J|/4 + |Ω|N/2)
  double max_norm_drift = 0.0;    // max_i ||s_i(t)| - |s_i(0)|| / |s_i(0)|
};

struct TrajectoryBatch {
  std::size_t n_traj = 0;
  std::uint64_t seed = 0;
  std::vector<double> times;      // μs
  std::vector<double> sx_mean;    // trajectory mean of (1/N)Σ s_x
  std::vector<double> sx_stderr;  // sample std / sqrt(n_traj)
  TrajectoryDiagnostics worst;    // worst case over trajectories
};

/// Monte Carlo average over n_traj >= 2 trajectories. Trajectory k uses
/// trajectory_seed(seed, k); trajectories are integrated in fixed groups of
/// options.batch_size, so results do not depend on the worker count.
TrajectoryBatch dtwa_magnetization(const CouplingMatrix& couplings, double omega,
                                   std::size_t n_traj, std::span<const double> times_us,
                                   std::uint64_t seed, const DtwaOptions& options = {});

}  // namespace pairloc::dtwa
