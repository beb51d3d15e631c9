#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pairloc {

using Vec3 = Eigen::Vector3d;

struct InteractionLaw;

enum class CloudShape { Box, Gaussian };

std::string to_string(CloudShape shape);
CloudShape cloud_shape_from_string(const std::string& name);

/// Extent of the spin cloud in μm.
///
/// For `Box` the radii are half-extents, so the box spans [-r, r] on each axis.
/// For `Gaussian` the radii are 1/e² radii and each axis is sampled with
/// standard deviation r/2.
struct CloudGeometry {
  CloudShape shape = CloudShape::Box;
  double radius_x = 1.0;
  double radius_y = 1.0;
  double radius_z = 1.0;

  void validate() const;
  /// Box: full volume. Gaussian: (2π)^{3/2} σx σy σz, the volume that holds
  /// N spins at the peak density.
  double volume() const;
};

struct SpinPositions {
  std::vector<Vec3> points;  // μm
  double r_bl = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return points.size(); }
};

class SaturationError : public std::runtime_error {
 public:
  SaturationError(std::size_t placed, std::size_t target, std::size_t attempts);
  std::size_t placed() const { return placed_; }

 private:
  std::size_t placed_;
};

/// Random sequential adsorption: candidates are drawn from the cloud density
/// and rejected if they fall closer than r_bl to an accepted spin.
/// max_attempts = 0 selects the default of 1000 * n_target.
SpinPositions sample_blockaded_positions(const CloudGeometry& geometry,
                                         std::size_t n_target, double r_bl,
                                         std::uint64_t seed,
                                         std::size_t max_attempts = 0);

/// a0 = (3 / (4π ρ))^{1/3}. Throws std::domain_error for ρ <= 0.
double wigner_seitz_radius(double density);

/// Inverse of wigner_seitz_radius.
double density_from_wigner_seitz(double a0);

/// median_i max_{j≠i} |J_ij| in MHz (couplings stored as J/2π).
double median_nn_coupling(const SpinPositions& positions, const InteractionLaw& law);

/// Smallest pairwise distance; +inf for fewer than two points.
double min_pair_distance(const std::vector<Vec3>& points);

}  // namespace pairloc
