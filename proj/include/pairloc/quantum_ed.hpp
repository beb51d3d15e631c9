#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "pairloc/couplings.hpp"

namespace pairloc::ed {

// Representation: the computational basis is the eigenbasis of s_x, obtained
// from the lab s_z basis by a Hadamard on every spin. Bit i = 0 means spin i
// is |→⟩, bit 1 means |←⟩. In this basis the Hamiltonian is real and
// conserves the parity of the number of ← spins, and the initial state |→⟩^N
// is basis state 0.

struct EdOptions {
  int max_spins = 14;
  // Sectors up to 2^(dense_spins-1) states are propagated by full
  // diagonalization, larger ones by Krylov stepping.
  int dense_spins = 10;
  // Largest N for which the full spectrum (diagonal ensemble) is computed.
  int spectrum_spins = 12;
  double degeneracy_tol = 1e-8;  // MHz
  int krylov_dim = 40;
  double krylov_tol = 1e-12;
};

class DimensionError : public std::length_error {
 public:
  using std::length_error::length_error;
};

struct PureState {
  Eigen::VectorXcd amplitudes;
  int n_spins = 0;

  double norm() const { return amplitudes.norm(); }
};

/// |→⟩^{⊗N}.
PureState x_polarized_state(int n_spins);

class XxzHamiltonian {
 public:
  XxzHamiltonian(Eigen::MatrixXd couplings, double delta, double omega);

  int n_spins() const { return n_; }
  double delta() const { return delta_; }
  double omega() const { return omega_; }
  const Eigen::MatrixXd& couplings() const { return couplings_; }
  std::size_t dimension() const { return std::size_t{1} << n_; }

  /// Multiplies all couplings and the field by `factor` (factor = -1 gives
  /// the time-reversed generator).
  XxzHamiltonian scaled(double factor) const;

  double diagonal_element(std::uint64_t basis_state) const;

  /// Full 2^N operator in the x basis, MHz.
  Eigen::SparseMatrix<double> matrix() const;

  /// Block on the states whose ←-count parity equals `parity`.
  Eigen::SparseMatrix<double> sector_matrix(int parity) const;

 private:
  int n_;
  Eigen::MatrixXd couplings_;
  double delta_;
  double omega_;
};

/// ½Σ_{i,j} J_ij (sx sx + sy sy + δ sz sz) + Ω Σ_i sx_i, spin-½ operators.
XxzHamiltonian build_hamiltonian(const CouplingMatrix& couplings, double omega,
                                 const EdOptions& options = {});

/// Basis states of one parity sector, in increasing order.
std::vector<std::uint64_t> sector_states(int n_spins, int parity);

/// (1/N) Σ_i s_x^i for a basis state.
double basis_magnetization(std::uint64_t basis_state, int n_spins);

/// ⟨S_x⟩ = ⟨Σ_i s_x^i⟩ / N.
double magnetization(const PureState& state);

/// ⟨ψ|H|ψ⟩ in MHz.
double energy(const XxzHamiltonian& hamiltonian, const PureState& state);

/// Time evolution e^{-i 2π H t}, t in μs. Requests must be non-decreasing in t.
class Propagator {
 public:
  Propagator(const XxzHamiltonian& hamiltonian, const PureState& initial,
             const EdOptions& options = {});
  ~Propagator();
  Propagator(Propagator&&) noexcept;
  Propagator& operator=(Propagator&&) noexcept;

  PureState state_at(double t_us);

 private:
  struct Sector;
  std::vector<Sector> sectors_;
  int n_spins_;
  EdOptions options_;
  double last_time_ = 0.0;
};

/// ⟨S_x⟩(t) for each requested time (sorted, non-negative).
std::vector<double> evolve_magnetization(const XxzHamiltonian& hamiltonian,
                                         const PureState& initial,
                                         std::span<const double> times_us,
                                         const EdOptions& options = {});

struct SpectralData {
  std::vector<double> eigenvalues;      // MHz
  std::vector<double> overlaps;         // |⟨ψ0|ψ_k⟩|²
  std::vector<double> magnetizations;   // ⟨ψ_k|S_x|ψ_k⟩
};

/// Full spectrum restricted to sectors the initial state touches (the other
/// sectors carry zero overlap).
SpectralData spectral_data(const XxzHamiltonian& hamiltonian, const PureState& initial,
                           const EdOptions& options = {});

/// Σ_k |⟨ψ0|ψ_k⟩|² ⟨ψ_k|S_x|ψ_k⟩, evaluated blockwise on degenerate
/// eigenspaces (eigenvalues within degeneracy_tol) so the result does not
/// depend on the eigenbasis chosen inside a multiplet.
double diagonal_ensemble_sx(const XxzHamiltonian& hamiltonian, const PureState& initial,
                            const EdOptions& options = {});

/// Real orthogonal map taking two-spin operators from the lab s_z basis to the
/// ordered basis {→→, →←, ←→, ←←} used for the closed-form pair spectrum.
Eigen::Matrix4d pair_frame_map();

}  // namespace pairloc::ed
