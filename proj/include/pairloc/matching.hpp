#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace pairloc::matching {

struct WeightedEdge {
  int u;
  int v;
  std::int64_t weight;
};

/// Maximum-weight matching on a general graph (Edmonds' blossom algorithm
/// with dual variables, O(V³)). With max_cardinality set, the result is the
/// heaviest among all maximum-cardinality matchings. Returns mate[v] or -1.
std::vector<int> max_weight_matching(int n_vertices, const std::vector<WeightedEdge>& edges,
                                     bool max_cardinality);

/// Exact minimum-total-distance perfect matching of a symmetric distance
/// matrix with an even number of rows. Distances are quantized to 1e-6 units
/// before matching.
std::vector<int> min_distance_perfect_matching(const Eigen::MatrixXd& distance);

/// Greedy matching: accept candidate pairs in order of increasing distance.
/// Candidates are the k nearest neighbours of each vertex, with an
/// all-pairs pass over whatever is left unmatched.
std::vector<int> greedy_matching(const Eigen::MatrixXd& distance, int k_nearest = 16);

/// Sum of distance(i, mate[i]) over matched pairs (each pair counted once).
double matching_cost(const Eigen::MatrixXd& distance, const std::vector<int>& mate);

}  // namespace pairloc::matching
