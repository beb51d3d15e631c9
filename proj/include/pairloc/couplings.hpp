#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pairloc/geometry.hpp"

namespace pairloc {

enum class InteractionKind { Dipolar, VanDerWaals };

/// Power-law exchange J(r, θ) = C_a r^{-a} (1 - 3cos²θ)^{angular}.
/// All energies are frequencies E/(2πħ); C_a in MHz·μm^a.
struct InteractionLaw {
  InteractionKind kind = InteractionKind::Dipolar;
  double c_a = 1150.0;
  int exponent = 3;
  double delta = 0.0;
  bool angular = true;

  void validate() const;
};

/// 48S ↔ 48P: C3/(2π) = 1.15 GHz μm³, δ = 0.
InteractionLaw dipolar_48s48p();
/// 61S ↔ 62S: C6/(2π) = 507 GHz μm⁶, δ = -0.7, isotropic.
InteractionLaw vdw_61s62s();

/// Looks up "dipolar-48S48P" or "vdw-61S62S"; throws std::invalid_argument otherwise.
InteractionLaw interaction_law_preset(const std::string& name);
std::vector<std::string> interaction_law_preset_names();

class SingularCouplingError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Coupling between two spins in MHz. θ is measured against +z.
double pair_coupling(const Vec3& r_i, const Vec3& r_j, const InteractionLaw& law);

/// Dense symmetric coupling matrix (MHz, zero diagonal).
struct CouplingMatrix {
  Eigen::MatrixXd J;
  double delta = 0.0;

  Eigen::Index size() const { return J.rows(); }
};

/// cutoff_um, when set, zeroes couplings between spins further apart than the
/// cutoff. Off by default: the a = 3 tail is not summable in 3D.
CouplingMatrix build_coupling_matrix(const SpinPositions& positions,
                                     const InteractionLaw& law,
                                     std::optional<double> cutoff_um = std::nullopt);

}  // namespace pairloc
