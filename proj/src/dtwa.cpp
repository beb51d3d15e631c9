#include "pairloc/dtwa.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "pairloc/parallel.hpp"

namespace pairloc::dtwa {

namespace odeint = boost::numeric::odeint;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

StepSizeUnderflow::StepSizeUnderflow(double time_us, double step_us)
    : std::runtime_error("DTWA step size underflow (dt = " + std::to_string(step_us) +
                         " us) at t = " + std::to_string(time_us) + " us"),
      time_(time_us) {}

TrajectoryError::TrajectoryError(std::size_t trajectory, const std::string& what)
    : std::runtime_error("trajectory " + std::to_string(trajectory) + ": " + what),
      trajectory_(trajectory) {}

ClassicalSpinConfig sample_initial_spins(std::size_t n_spins, std::uint64_t seed) {
  if (n_spins < 1) throw std::invalid_argument("need at least one spin");
  std::mt19937_64 rng(seed);
  ClassicalSpinConfig s(static_cast<Eigen::Index>(n_spins), 3);
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const std::uint64_t bits = rng();
    s(i, 0) = 0.5;
    s(i, 1) = (bits & 1U) ? 0.5 : -0.5;
    s(i, 2) = (bits & 2U) ? 0.5 : -0.5;
  }
  return s;
}

std::uint64_t trajectory_seed(std::uint64_t seed, std::size_t index) {
  return derive_seed(seed, index);
}

double classical_energy(const CouplingMatrix& couplings, double omega,
                        const ClassicalSpinConfig& spins) {
  const Eigen::MatrixXd field = couplings.J * spins;
  double e = 0.5 * (spins.col(0).dot(field.col(0)) + spins.col(1).dot(field.col(1)) +
                    couplings.delta * spins.col(2).dot(field.col(2)));
  return e + omega * spins.col(0).sum();
}

namespace {

// Batch of B trajectories stored as an N×3B matrix: columns [0,B) hold s_x,
// [B,2B) s_y and [2B,3B) s_z of every trajectory.
class BatchSystem {
 public:
  BatchSystem(const CouplingMatrix& couplings, double omega, Eigen::Index batch,
              bool single_precision)
      : J_(couplings.J), delta_(couplings.delta), omega_(omega), batch_(batch),
        single_(single_precision) {
    if (single_) Jf_ = J_.cast<float>();
  }

  // Aligned so that vectorized reductions over the mapped columns peel the
  // same way in every thread; plain malloc alignment varies between buffers.
  using State = std::vector<double, Eigen::aligned_allocator<double>>;

  void operator()(const State& xs, State& dxs, double t) {
    last_time_ = t;
    const Eigen::Map<const Eigen::MatrixXd> x(xs.data(), J_.rows(), 3 * batch_);
    dxs.resize(xs.size());
    Eigen::Map<Eigen::MatrixXd> dxdt(dxs.data(), J_.rows(), 3 * batch_);
    compute_field(x);
    const Eigen::Index B = batch_;
    const auto sx = x.leftCols(B).array();
    const auto sy = x.middleCols(B, B).array();
    const auto sz = x.rightCols(B).array();
    const auto bx = field_.leftCols(B).array() + omega_;
    const auto by = field_.middleCols(B, B).array();
    const auto bz = delta_ * field_.rightCols(B).array();
    dxdt.leftCols(B).array() = kTwoPi * (by * sz - bz * sy);
    dxdt.middleCols(B, B).array() = kTwoPi * (bz * sx - bx * sz);
    dxdt.rightCols(B).array() = kTwoPi * (bx * sy - by * sx);
  }

  // Diagnostics always use the double-precision product.
  template <class M>
  Eigen::VectorXd energies(const M& x) {
    field_.noalias() = J_ * x;
    const Eigen::Index B = batch_;
    Eigen::VectorXd e(B);
    for (Eigen::Index b = 0; b < B; ++b) {
      e(b) = 0.5 * (x.col(b).dot(field_.col(b)) + x.col(B + b).dot(field_.col(B + b)) +
                    delta_ * x.col(2 * B + b).dot(field_.col(2 * B + b))) +
             omega_ * x.col(b).sum();
    }
    return e;
  }

  double last_time() const { return last_time_; }

 private:
  template <class M>
  void compute_field(const M& x) {
    if (single_) {
      xf_ = x.template cast<float>();
      fieldf_.noalias() = Jf_ * xf_;
      field_ = fieldf_.cast<double>();
    } else {
      field_.noalias() = J_ * x;
    }
  }

  const Eigen::MatrixXd& J_;
  double delta_;
  double omega_;
  Eigen::Index batch_;
  bool single_;
  Eigen::MatrixXd field_;
  Eigen::MatrixXf Jf_, xf_, fieldf_;
  double last_time_ = 0.0;
};

struct BatchResult {
  Eigen::MatrixXd magnetization;  // n_times × B
  std::vector<TrajectoryDiagnostics> diagnostics;
  std::vector<Eigen::MatrixXd> states;  // only when requested
};

BatchResult integrate_batch(const CouplingMatrix& couplings, double omega,
                            const std::vector<ClassicalSpinConfig>& initial,
                            std::span<const double> times, const DtwaOptions& options,
                            bool keep_states) {
  const auto n = couplings.size();
  const auto B = static_cast<Eigen::Index>(initial.size());
  BatchSystem::State xs(static_cast<std::size_t>(n * 3 * B));
  Eigen::Map<Eigen::MatrixXd> x(xs.data(), n, 3 * B);
  for (Eigen::Index b = 0; b < B; ++b) {
    x.col(b) = initial[static_cast<std::size_t>(b)].col(0);
    x.col(B + b) = initial[static_cast<std::size_t>(b)].col(1);
    x.col(2 * B + b) = initial[static_cast<std::size_t>(b)].col(2);
  }

  BatchSystem system(couplings, omega, B, options.single_precision_field);
  const Eigen::VectorXd e0 = system.energies(x);
  const double scale_base = 0.25 * couplings.J.cwiseAbs().sum() / 2.0 +
                            std::abs(omega) * static_cast<double>(n) / 2.0;
  Eigen::MatrixXd norm0(n, B);
  for (Eigen::Index b = 0; b < B; ++b)
    norm0.col(b) = (x.col(b).array().square() + x.col(B + b).array().square() +
                    x.col(2 * B + b).array().square())
                       .sqrt();

  BatchResult result;
  result.magnetization.resize(static_cast<Eigen::Index>(times.size()), B);
  result.diagnostics.assign(static_cast<std::size_t>(B), {});

  std::size_t k = 0;
  auto observe = [&](const BatchSystem::State& ss, double) {
    const Eigen::Map<const Eigen::MatrixXd> state(ss.data(), n, 3 * B);
    const auto row = static_cast<Eigen::Index>(k);
    for (Eigen::Index b = 0; b < B; ++b)
      result.magnetization(row, b) = state.col(b).mean();
    const Eigen::VectorXd e = system.energies(state);
    for (Eigen::Index b = 0; b < B; ++b) {
      auto& d = result.diagnostics[static_cast<std::size_t>(b)];
      const double scale = std::max(std::abs(e0(b)), scale_base);
      d.max_energy_drift = std::max(d.max_energy_drift, std::abs(e(b) - e0(b)) / scale);
      const Eigen::ArrayXd norm = (state.col(b).array().square() +
                                   state.col(B + b).array().square() +
                                   state.col(2 * B + b).array().square())
                                      .sqrt();
      d.max_norm_drift = std::max(
          d.max_norm_drift, ((norm - norm0.col(b).array()).abs() / norm0.col(b).array()).maxCoeff());
    }
    if (keep_states) result.states.push_back(state);
    ++k;
  };

  using Stepper = odeint::runge_kutta_fehlberg78<BatchSystem::State>;
  auto stepper = odeint::make_controlled(options.tol, options.tol, Stepper());
  const double span = times.empty() ? 0.0 : times.back();
  double dt = std::max(options.min_step, 1e-4 * span);
  double t = 0.0;
  std::size_t steps = 0;
  for (const double target : times) {
    while (t < target) {
      const bool clipped = t + dt >= target;
      double h = clipped ? target - t : dt;
      const double t_before = t;
      if (stepper.try_step(std::ref(system), xs, t, h) == odeint::success) {
        if (clipped) {
          t = target;
          dt = std::max(dt, h);
        } else {
          dt = h;
        }
      } else {
        dt = h;
        if (dt < options.min_step) throw StepSizeUnderflow(t_before, dt);
      }
      if (++steps > 100'000'000) throw StepSizeUnderflow(t, dt);
    }
    observe(xs, t);
  }
  return result;
}

void check_times(std::span<const double> times) {
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= 0.0)) throw std::invalid_argument("times must be non-negative");
    if (k > 0 && times[k] <= times[k - 1])
      throw std::invalid_argument("times must be strictly increasing");
  }
}

}  // namespace

std::vector<ClassicalSpinConfig> evolve_trajectory(const CouplingMatrix& couplings, double omega,
                                                   const ClassicalSpinConfig& initial,
                                                   std::span<const double> times_us, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (initial.rows() != couplings.size())
    throw std::invalid_argument("spin configuration does not match coupling matrix");
  check_times(times_us);
  if (times_us.empty()) return {};
  DtwaOptions options;
  options.tol = tol;
  auto batch = integrate_batch(couplings, omega, {initial}, times_us, options, true);
  std::vector<ClassicalSpinConfig> out;
  out.reserve(batch.states.size());
  for (const auto& s : batch.states) out.emplace_back(s);
  return out;
}

TrajectoryBatch dtwa_magnetization(const CouplingMatrix& couplings, double omega,
                                   std::size_t n_traj, std::span<const double> times_us,
                                   std::uint64_t seed, const DtwaOptions& options) {
  if (n_traj < 2) throw std::invalid_argument("DTWA needs at least 2 trajectories");
  if (!(options.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  check_times(times_us);
  const auto n_spins = static_cast<std::size_t>(couplings.size());
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  const std::size_t n_batches = (n_traj + batch - 1) / batch;
  const std::size_t n_times = times_us.size();

  // per_traj(t, k): magnetization of trajectory k at time index t.
  Eigen::MatrixXd per_traj(static_cast<Eigen::Index>(n_times), static_cast<Eigen::Index>(n_traj));
  std::vector<TrajectoryDiagnostics> diagnostics(n_traj);

  parallel_for(
      n_batches,
      [&](std::size_t ib) {
        const std::size_t first = ib * batch;
        const std::size_t last = std::min(n_traj, first + batch);
        std::vector<ClassicalSpinConfig> initial;
        for (std::size_t k = first; k < last; ++k)
          initial.push_back(sample_initial_spins(n_spins, trajectory_seed(seed, k)));
        BatchResult r;
        try {
          r = integrate_batch(couplings, omega, initial, times_us, options, false);
        } catch (const std::exception& e) {
          throw TrajectoryError(first, e.what());
        }
        for (std::size_t k = first; k < last; ++k) {
          per_traj.col(static_cast<Eigen::Index>(k)) = r.magnetization.col(static_cast<Eigen::Index>(k - first));
          diagnostics[k] = r.diagnostics[k - first];
        }
      },
      options.workers);

  TrajectoryBatch out;
  out.n_traj = n_traj;
  out.seed = seed;
  out.times.assign(times_us.begin(), times_us.end());
  out.sx_mean.resize(n_times);
  out.sx_stderr.resize(n_times);
  std::vector<double> row(n_traj), sq(n_traj);
  for (std::size_t t = 0; t < n_times; ++t) {
    for (std::size_t k = 0; k < n_traj; ++k)
      row[k] = per_traj(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k));
    const double mean = compensated_sum(row) / static_cast<double>(n_traj);
    for (std::size_t k = 0; k < n_traj; ++k) sq[k] = (row[k] - mean) * (row[k] - mean);
    const double var = compensated_sum(sq) / static_cast<double>(n_traj - 1);
    out.sx_mean[t] = mean;
    out.sx_stderr[t] = std::sqrt(var / static_cast<double>(n_traj));
  }
  for (const auto& d : diagnostics) {
    out.worst.max_energy_drift = std::max(out.worst.max_energy_drift, d.max_energy_drift);
    out.worst.max_norm_drift = std::max(out.worst.max_norm_drift, d.max_norm_drift);
  }
  return out;
}

}  // namespace pairloc::dtwa
