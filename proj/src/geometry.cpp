#include "pairloc/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <unordered_map>

#include "pairloc/couplings.hpp"

namespace pairloc {

std::string to_string(CloudShape shape) {
  return shape == CloudShape::Box ? "box" : "gaussian";
}

CloudShape cloud_shape_from_string(const std::string& name) {
  if (name == "box" || name == "ellipsoid-box") return CloudShape::Box;
  if (name == "gaussian" || name == "gaussian-ellipsoid") return CloudShape::Gaussian;
  throw std::invalid_argument("unknown cloud shape '" + name + "'");
}

void CloudGeometry::validate() const {
  for (const double r : {radius_x, radius_y, radius_z}) {
    if (!(r > 0.0) || !std::isfinite(r))
      throw std::invalid_argument("cloud radii must be positive and finite");
  }
}

double CloudGeometry::volume() const {
  if (shape == CloudShape::Box) return 8.0 * radius_x * radius_y * radius_z;
  const double sx = radius_x / 2, sy = radius_y / 2, sz = radius_z / 2;
  return std::pow(2.0 * std::numbers::pi, 1.5) * sx * sy * sz;
}

SaturationError::SaturationError(std::size_t placed, std::size_t target,
                                 std::size_t attempts)
    : std::runtime_error("blockade saturation: placed " + std::to_string(placed) +
                         " of " + std::to_string(target) + " spins in " +
                         std::to_string(attempts) + " attempts"),
      placed_(placed) {}

namespace {

// Uniform cell grid with cell edge >= r_bl; candidates only need the 27
// neighboring cells.
class CellGrid {
 public:
  explicit CellGrid(double cell) : cell_(cell) {}

  bool has_neighbor_within(const Vec3& p, double r, const std::vector<Vec3>& pts) const {
    const auto c = cell_of(p);
    const double r2 = r * r;
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          auto it = cells_.find(key(c[0] + dx, c[1] + dy, c[2] + dz));
          if (it == cells_.end()) continue;
          for (const std::size_t idx : it->second)
            if ((pts[idx] - p).squaredNorm() < r2) return true;
        }
    return false;
  }

  void insert(const Vec3& p, std::size_t idx) {
    const auto c = cell_of(p);
    cells_[key(c[0], c[1], c[2])].push_back(idx);
  }

 private:
  std::array<std::int64_t, 3> cell_of(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
            static_cast<std::int64_t>(std::floor(p.y() / cell_)),
            static_cast<std::int64_t>(std::floor(p.z() / cell_))};
  }
  static std::uint64_t key(std::int64_t x, std::int64_t y, std::int64_t z) {
    auto u = [](std::int64_t v) { return static_cast<std::uint64_t>(v + (1 << 20)) & 0x1fffff; };
    return (u(x) << 42) | (u(y) << 21) | u(z);
  }

  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

}  // namespace

SpinPositions sample_blockaded_positions(const CloudGeometry& geometry,
                                         std::size_t n_target, double r_bl,
                                         std::uint64_t seed, std::size_t max_attempts) {
  geometry.validate();
  if (n_target < 1) throw std::invalid_argument("n_target must be >= 1");
  if (!(r_bl >= 0.0) || !std::isfinite(r_bl))
    throw std::invalid_argument("r_bl must be finite and >= 0");
  if (max_attempts == 0) max_attempts = 1000 * n_target;
  if (max_attempts < n_target) throw std::invalid_argument("max_attempts must be >= n_target");

  std::mt19937_64 rng(seed);
  auto draw = [&]() -> Vec3 {
    if (geometry.shape == CloudShape::Box) {
      std::uniform_real_distribution<double> ux(-geometry.radius_x, geometry.radius_x);
      std::uniform_real_distribution<double> uy(-geometry.radius_y, geometry.radius_y);
      std::uniform_real_distribution<double> uz(-geometry.radius_z, geometry.radius_z);
      const double x = ux(rng), y = uy(rng), z = uz(rng);
      return {x, y, z};
    }
    std::normal_distribution<double> nx(0.0, geometry.radius_x / 2);
    std::normal_distribution<double> ny(0.0, geometry.radius_y / 2);
    std::normal_distribution<double> nz(0.0, geometry.radius_z / 2);
    const double x = nx(rng), y = ny(rng), z = nz(rng);
    return {x, y, z};
  };

  SpinPositions out;
  out.r_bl = r_bl;
  out.seed = seed;
  out.points.reserve(n_target);

  const double cell = r_bl > 0.0 ? r_bl
                                 : std::max({geometry.radius_x, geometry.radius_y,
                                             geometry.radius_z});
  CellGrid grid(cell);
  std::size_t attempts = 0;
  while (out.points.size() < n_target) {
    if (attempts == max_attempts)
      throw SaturationError(out.points.size(), n_target, attempts);
    ++attempts;
    const Vec3 candidate = draw();
    if (r_bl > 0.0 && grid.has_neighbor_within(candidate, r_bl, out.points)) continue;
    grid.insert(candidate, out.points.size());
    out.points.push_back(candidate);
  }
  return out;
}

double wigner_seitz_radius(double density) {
  if (!(density > 0.0)) throw std::domain_error("density must be positive");
  return std::cbrt(3.0 / (4.0 * std::numbers::pi * density));
}

double density_from_wigner_seitz(double a0) {
  if (!(a0 > 0.0)) throw std::domain_error("a0 must be positive");
  return 3.0 / (4.0 * std::numbers::pi * a0 * a0 * a0);
}

double median_nn_coupling(const SpinPositions& positions, const InteractionLaw& law) {
  const std::size_t n = positions.size();
  if (n < 2) throw std::invalid_argument("median_nn_coupling needs at least 2 spins");
  std::vector<double> strongest(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = std::abs(pair_coupling(positions.points[i], positions.points[j], law));
      strongest[i] = std::max(strongest[i], c);
      strongest[j] = std::max(strongest[j], c);
    }
  const std::size_t mid = n / 2;
  std::nth_element(strongest.begin(), strongest.begin() + mid, strongest.end());
  if (n % 2 == 1) return strongest[mid];
  const double upper = strongest[mid];
  const double lower = *std::max_element(strongest.begin(), strongest.begin() + mid);
  return 0.5 * (lower + upper);
}

double min_pair_distance(const std::vector<Vec3>& points) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      best = std::min(best, (points[i] - points[j]).norm());
  return best;
}

}  // namespace pairloc
