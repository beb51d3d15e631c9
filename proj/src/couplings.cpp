#include "pairloc/couplings.hpp"

#include <cmath>

namespace pairloc {

void InteractionLaw::validate() const {
  if (exponent != 3 && exponent != 6)
    throw std::invalid_argument("interaction exponent must be 3 or 6");
  if (!(c_a > 0.0) || !std::isfinite(c_a))
    throw std::invalid_argument("interaction strength C_a must be positive");
  if (!std::isfinite(delta)) throw std::invalid_argument("anisotropy must be finite");
}

InteractionLaw dipolar_48s48p() {
  return {InteractionKind::Dipolar, 1150.0, 3, 0.0, true};
}

InteractionLaw vdw_61s62s() {
  return {InteractionKind::VanDerWaals, 507000.0, 6, -0.7, false};
}

InteractionLaw interaction_law_preset(const std::string& name) {
  if (name == "dipolar-48S48P") return dipolar_48s48p();
  if (name == "vdw-61S62S") return vdw_61s62s();
  throw std::invalid_argument("unknown interaction preset '" + name + "'");
}

std::vector<std::string> interaction_law_preset_names() {
  return {"dipolar-48S48P", "vdw-61S62S"};
}

double pair_coupling(const Vec3& r_i, const Vec3& r_j, const InteractionLaw& law) {
  const Vec3 d = r_j - r_i;
  const double r2 = d.squaredNorm();
  if (!(r2 > 0.0)) throw SingularCouplingError("coincident spin positions");
  const double r = std::sqrt(r2);
  const double radial = law.exponent == 3 ? law.c_a / (r2 * r) : law.c_a / (r2 * r2 * r2);
  if (!law.angular) return radial;
  const double cos2 = d.z() * d.z() / r2;
  return radial * (1.0 - 3.0 * cos2);
}

CouplingMatrix build_coupling_matrix(const SpinPositions& positions,
                                     const InteractionLaw& law,
                                     std::optional<double> cutoff_um) {
  law.validate();
  const auto n = static_cast<Eigen::Index>(positions.size());
  if (n < 2) throw std::invalid_argument("coupling matrix needs at least 2 spins");
  CouplingMatrix out;
  out.delta = law.delta;
  out.J = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto& a = positions.points[static_cast<std::size_t>(i)];
      const auto& b = positions.points[static_cast<std::size_t>(j)];
      if (cutoff_um && (a - b).norm() > *cutoff_um) continue;
      const double c = pair_coupling(a, b, law);
      out.J(i, j) = c;
      out.J(j, i) = c;
    }
  return out;
}

}  // namespace pairloc
