#include "pairloc/quantum_ed.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

namespace pairloc::ed {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int parity_of(std::uint64_t state) { return std::popcount(state) & 1; }

// Sector-local index of every full-space basis state (or -1).
std::vector<std::int64_t> sector_index_map(int n, const std::vector<std::uint64_t>& states) {
  std::vector<std::int64_t> map(std::size_t{1} << n, -1);
  for (std::size_t k = 0; k < states.size(); ++k) map[states[k]] = static_cast<std::int64_t>(k);
  return map;
}

}  // namespace

PureState x_polarized_state(int n_spins) {
  if (n_spins < 1 || n_spins > 30) throw DimensionError("unsupported spin count");
  PureState s;
  s.n_spins = n_spins;
  s.amplitudes = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(std::size_t{1} << n_spins));
  s.amplitudes(0) = 1.0;
  return s;
}

XxzHamiltonian::XxzHamiltonian(Eigen::MatrixXd couplings, double delta, double omega)
    : n_(static_cast<int>(couplings.rows())),
      couplings_(std::move(couplings)),
      delta_(delta),
      omega_(omega) {}

XxzHamiltonian XxzHamiltonian::scaled(double factor) const {
  return XxzHamiltonian(couplings_ * factor, delta_, omega_ * factor);
}

double XxzHamiltonian::diagonal_element(std::uint64_t b) const {
  double value = 0.0;
  for (int i = 0; i < n_; ++i) {
    const double si = ((b >> i) & 1U) ? -0.5 : 0.5;
    value += omega_ * si;
    for (int j = i + 1; j < n_; ++j) {
      const double sj = ((b >> j) & 1U) ? -0.5 : 0.5;
      value += couplings_(i, j) * si * sj;
    }
  }
  return value;
}

namespace {

// Calls emit(target_state, amplitude) for every off-diagonal element in the
// column of basis state b. s_y s_y + δ s_z s_z in the x basis flips two spins:
// J(δ+1)/4 for antiparallel pairs, J(δ-1)/4 for parallel ones.
template <typename Emit>
void for_each_offdiagonal(const Eigen::MatrixXd& J, double delta, int n, std::uint64_t b,
                          Emit&& emit) {
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double jij = J(i, j);
      if (jij == 0.0) continue;
      const bool parallel = (((b >> i) ^ (b >> j)) & 1U) == 0;
      const double amp = 0.25 * jij * (parallel ? (delta - 1.0) : (delta + 1.0));
      if (amp == 0.0) continue;
      emit(b ^ ((std::uint64_t{1} << i) | (std::uint64_t{1} << j)), amp);
    }
}

}  // namespace

Eigen::SparseMatrix<double> XxzHamiltonian::matrix() const {
  const std::size_t dim = dimension();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(dim * (1 + static_cast<std::size_t>(n_ * (n_ - 1) / 2)));
  for (std::uint64_t b = 0; b < dim; ++b) {
    const auto col = static_cast<Eigen::Index>(b);
    triplets.emplace_back(col, col, diagonal_element(b));
    for_each_offdiagonal(couplings_, delta_, n_, b, [&](std::uint64_t target, double amp) {
      triplets.emplace_back(static_cast<Eigen::Index>(target), col, amp);
    });
  }
  Eigen::SparseMatrix<double> H(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  H.setFromTriplets(triplets.begin(), triplets.end());
  return H;
}

Eigen::SparseMatrix<double> XxzHamiltonian::sector_matrix(int parity) const {
  const auto states = sector_states(n_, parity);
  const auto index = sector_index_map(n_, states);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(states.size() * (1 + static_cast<std::size_t>(n_ * (n_ - 1) / 2)));
  for (std::size_t k = 0; k < states.size(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    triplets.emplace_back(col, col, diagonal_element(states[k]));
    for_each_offdiagonal(couplings_, delta_, n_, states[k], [&](std::uint64_t target, double amp) {
      triplets.emplace_back(static_cast<Eigen::Index>(index[target]), col, amp);
    });
  }
  const auto dim = static_cast<Eigen::Index>(states.size());
  Eigen::SparseMatrix<double> H(dim, dim);
  H.setFromTriplets(triplets.begin(), triplets.end());
  return H;
}

XxzHamiltonian build_hamiltonian(const CouplingMatrix& couplings, double omega,
                                 const EdOptions& options) {
  const auto n = couplings.size();
  if (n < 1) throw std::invalid_argument("empty coupling matrix");
  if (n > options.max_spins)
    throw DimensionError("exact diagonalization limited to " + std::to_string(options.max_spins) +
                         " spins, got " + std::to_string(n));
  return XxzHamiltonian(couplings.J, couplings.delta, omega);
}

std::vector<std::uint64_t> sector_states(int n_spins, int parity) {
  std::vector<std::uint64_t> out;
  out.reserve(std::size_t{1} << std::max(0, n_spins - 1));
  for (std::uint64_t b = 0; b < (std::uint64_t{1} << n_spins); ++b)
    if (parity_of(b) == parity) out.push_back(b);
  return out;
}

double basis_magnetization(std::uint64_t basis_state, int n_spins) {
  const int down = std::popcount(basis_state);
  return 0.5 * static_cast<double>(n_spins - 2 * down) / n_spins;
}

double magnetization(const PureState& state) {
  double m = 0.0;
  for (Eigen::Index b = 0; b < state.amplitudes.size(); ++b)
    m += std::norm(state.amplitudes(b)) *
         basis_magnetization(static_cast<std::uint64_t>(b), state.n_spins);
  return m;
}

double energy(const XxzHamiltonian& hamiltonian, const PureState& state) {
  const Eigen::SparseMatrix<double> H = hamiltonian.matrix();
  const Eigen::VectorXcd h_psi = H * state.amplitudes;
  return state.amplitudes.dot(h_psi).real();
}

// ---------------------------------------------------------------------------

struct Propagator::Sector {
  std::vector<std::uint64_t> states;
  // Dense route.
  bool dense = false;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  Eigen::VectorXcd coefficients;
  // Krylov route.
  Eigen::SparseMatrix<double> H;
  Eigen::VectorXcd current;
  double step_guess = 0.0;
};

namespace {

// One Lanczos approximation of exp(-i 2π H dt) v. Returns false if the
// a-posteriori error estimate exceeds tol.
bool krylov_step(const Eigen::SparseMatrix<double>& H, const Eigen::VectorXcd& v, double dt,
                 int max_dim, double tol, Eigen::VectorXcd& out) {
  const double beta0 = v.norm();
  if (beta0 == 0.0) {
    out = v;
    return true;
  }
  const Eigen::Index dim = v.size();
  const int m_max = static_cast<int>(std::min<Eigen::Index>(max_dim, dim));
  std::vector<Eigen::VectorXcd> basis;
  basis.reserve(static_cast<std::size_t>(m_max));
  std::vector<double> alpha, beta;
  basis.push_back(v / beta0);
  double beta_last = 0.0;
  for (int k = 0; k < m_max; ++k) {
    Eigen::VectorXcd w = H * basis[static_cast<std::size_t>(k)];
    const double a = basis[static_cast<std::size_t>(k)].dot(w).real();
    alpha.push_back(a);
    w -= a * basis[static_cast<std::size_t>(k)];
    if (k > 0) w -= beta.back() * basis[static_cast<std::size_t>(k - 1)];
    // Full reorthogonalization keeps the small basis orthonormal.
    for (const auto& q : basis) w -= q.dot(w) * q;
    const double b = w.norm();
    beta_last = b;
    if (k + 1 == m_max || b < 1e-12 * std::max(1.0, std::abs(a))) break;
    beta.push_back(b);
    basis.push_back(w / b);
  }
  const auto m = static_cast<Eigen::Index>(alpha.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    T(i, i) = alpha[static_cast<std::size_t>(i)];
    if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(T);
  const Eigen::VectorXcd phases =
      (eig.eigenvalues().cast<std::complex<double>>() * std::complex<double>(0, -kTwoPi * dt))
          .array()
          .exp();
  const Eigen::VectorXcd y =
      eig.eigenvectors().cast<std::complex<double>>() *
      (phases.cwiseProduct(eig.eigenvectors().row(0).transpose().cast<std::complex<double>>()));
  const bool exhausted = m < m_max || m == dim;
  const double err = exhausted ? 0.0 : beta0 * beta_last * std::abs(y(m - 1));
  if (err > tol) return false;
  out = Eigen::VectorXcd::Zero(dim);
  for (Eigen::Index i = 0; i < m; ++i) out += (beta0 * y(i)) * basis[static_cast<std::size_t>(i)];
  return true;
}

}  // namespace

Propagator::Propagator(const XxzHamiltonian& hamiltonian, const PureState& initial,
                       const EdOptions& options)
    : n_spins_(hamiltonian.n_spins()), options_(options) {
  if (initial.n_spins != hamiltonian.n_spins())
    throw std::invalid_argument("state and Hamiltonian spin counts differ");
  if (n_spins_ > options.max_spins) throw DimensionError("spin count exceeds ED limit");
  for (int parity = 0; parity < 2; ++parity) {
    Sector sector;
    sector.states = sector_states(n_spins_, parity);
    Eigen::VectorXcd local(static_cast<Eigen::Index>(sector.states.size()));
    for (std::size_t k = 0; k < sector.states.size(); ++k)
      local(static_cast<Eigen::Index>(k)) = initial.amplitudes(static_cast<Eigen::Index>(sector.states[k]));
    if (local.norm() == 0.0) continue;
    if (n_spins_ <= options.dense_spins) {
      sector.dense = true;
      const Eigen::MatrixXd Hs = Eigen::MatrixXd(hamiltonian.sector_matrix(parity));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Hs);
      sector.eigenvalues = eig.eigenvalues();
      sector.eigenvectors = eig.eigenvectors();
      sector.coefficients = sector.eigenvectors.transpose().cast<std::complex<double>>() * local;
    } else {
      sector.H = hamiltonian.sector_matrix(parity);
      sector.current = local;
      sector.step_guess = 0.01;
    }
    sectors_.push_back(std::move(sector));
  }
}

Propagator::~Propagator() = default;
Propagator::Propagator(Propagator&&) noexcept = default;
Propagator& Propagator::operator=(Propagator&&) noexcept = default;

PureState Propagator::state_at(double t) {
  if (t < last_time_ && std::any_of(sectors_.begin(), sectors_.end(),
                                    [](const Sector& s) { return !s.dense; }))
    throw std::invalid_argument("Krylov propagation requires non-decreasing times");
  PureState out;
  out.n_spins = n_spins_;
  out.amplitudes = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(std::size_t{1} << n_spins_));
  for (auto& sector : sectors_) {
    Eigen::VectorXcd local;
    if (sector.dense) {
      const Eigen::VectorXcd phases =
          (sector.eigenvalues.cast<std::complex<double>>() * std::complex<double>(0, -kTwoPi * t))
              .array()
              .exp();
      local = sector.eigenvectors.cast<std::complex<double>>() *
              phases.cwiseProduct(sector.coefficients);
    } else {
      double now = last_time_;
      while (now < t) {
        double dt = std::min(sector.step_guess, t - now);
        Eigen::VectorXcd next;
        int halvings = 0;
        while (!krylov_step(sector.H, sector.current, dt, options_.krylov_dim,
                            options_.krylov_tol, next)) {
          dt *= 0.5;
          if (++halvings > 60) throw std::runtime_error("Krylov step size underflow");
        }
        sector.current = std::move(next);
        now += dt;
        if (halvings == 0 && dt == sector.step_guess) sector.step_guess *= 1.5;
        else if (halvings > 0) sector.step_guess = dt;
      }
      local = sector.current;
    }
    for (std::size_t k = 0; k < sector.states.size(); ++k)
      out.amplitudes(static_cast<Eigen::Index>(sector.states[k])) = local(static_cast<Eigen::Index>(k));
  }
  last_time_ = std::max(last_time_, t);
  return out;
}

std::vector<double> evolve_magnetization(const XxzHamiltonian& hamiltonian,
                                         const PureState& initial,
                                         std::span<const double> times_us,
                                         const EdOptions& options) {
  if (hamiltonian.n_spins() > options.max_spins) throw DimensionError("spin count exceeds ED limit");
  for (std::size_t k = 0; k < times_us.size(); ++k) {
    if (times_us[k] < 0.0) throw std::invalid_argument("times must be non-negative");
    if (k > 0 && times_us[k] < times_us[k - 1]) throw std::invalid_argument("times must be sorted");
  }
  Propagator propagator(hamiltonian, initial, options);
  std::vector<double> out;
  out.reserve(times_us.size());
  for (const double t : times_us) out.push_back(magnetization(propagator.state_at(t)));
  return out;
}

namespace {

struct SectorSpectrum {
  std::vector<std::uint64_t> states;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  Eigen::VectorXcd local;
};

std::vector<SectorSpectrum> occupied_spectra(const XxzHamiltonian& H, const PureState& initial,
                                             const EdOptions& options) {
  if (H.n_spins() > options.spectrum_spins)
    throw DimensionError("full spectrum limited to " + std::to_string(options.spectrum_spins) +
                         " spins");
  if (initial.n_spins != H.n_spins())
    throw std::invalid_argument("state and Hamiltonian spin counts differ");
  std::vector<SectorSpectrum> out;
  for (int parity = 0; parity < 2; ++parity) {
    SectorSpectrum s;
    s.states = sector_states(H.n_spins(), parity);
    s.local.resize(static_cast<Eigen::Index>(s.states.size()));
    for (std::size_t k = 0; k < s.states.size(); ++k)
      s.local(static_cast<Eigen::Index>(k)) = initial.amplitudes(static_cast<Eigen::Index>(s.states[k]));
    if (s.local.norm() == 0.0) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(H.sector_matrix(parity)));
    s.eigenvalues = eig.eigenvalues();
    s.eigenvectors = eig.eigenvectors();
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

SpectralData spectral_data(const XxzHamiltonian& hamiltonian, const PureState& initial,
                           const EdOptions& options) {
  SpectralData out;
  const int n = hamiltonian.n_spins();
  for (const auto& s : occupied_spectra(hamiltonian, initial, options)) {
    const Eigen::VectorXcd c = s.eigenvectors.transpose().cast<std::complex<double>>() * s.local;
    for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k) {
      double m = 0.0;
      for (std::size_t b = 0; b < s.states.size(); ++b) {
        const double v = s.eigenvectors(static_cast<Eigen::Index>(b), k);
        m += v * v * basis_magnetization(s.states[b], n);
      }
      out.eigenvalues.push_back(s.eigenvalues(k));
      out.overlaps.push_back(std::norm(c(k)));
      out.magnetizations.push_back(m);
    }
  }
  return out;
}

double diagonal_ensemble_sx(const XxzHamiltonian& hamiltonian, const PureState& initial,
                            const EdOptions& options) {
  const int n = hamiltonian.n_spins();
  Eigen::VectorXd sx_diag;
  double total = 0.0;
  for (const auto& s : occupied_spectra(hamiltonian, initial, options)) {
    sx_diag.resize(static_cast<Eigen::Index>(s.states.size()));
    for (std::size_t b = 0; b < s.states.size(); ++b)
      sx_diag(static_cast<Eigen::Index>(b)) = basis_magnetization(s.states[b], n);
    const Eigen::VectorXcd c = s.eigenvectors.transpose().cast<std::complex<double>>() * s.local;
    const Eigen::Index dim = s.eigenvalues.size();
    Eigen::Index start = 0;
    while (start < dim) {
      Eigen::Index stop = start + 1;
      while (stop < dim && s.eigenvalues(stop) - s.eigenvalues(stop - 1) < options.degeneracy_tol)
        ++stop;
      // Projection of ψ0 onto the (possibly degenerate) eigenspace.
      const Eigen::VectorXcd projected =
          s.eigenvectors.middleCols(start, stop - start).cast<std::complex<double>>() *
          c.segment(start, stop - start);
      total += (projected.cwiseAbs2().array() * sx_diag.array()).sum();
      start = stop;
    }
  }
  return total;
}

Eigen::Matrix4d pair_frame_map() {
  Eigen::Matrix2d h;
  h << 1, 1, 1, -1;
  h /= std::sqrt(2.0);
  Eigen::Matrix4d hh;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d)
          // bit 0 is spin 1: index = s1 + 2 s2
          hh(a + 2 * b, c + 2 * d) = h(a, c) * h(b, d);
  // Columns of hh are x-basis states in lab coordinates; reorder rows into
  // {→→, →←, ←→, ←←} where →← has spin 2 flipped (index 2 in bit order).
  Eigen::Matrix4d permute = Eigen::Matrix4d::Zero();
  permute(0, 0) = 1;
  permute(1, 2) = 1;
  permute(2, 1) = 1;
  permute(3, 3) = 1;
  return permute * hh.transpose();
}

}  // namespace pairloc::ed
