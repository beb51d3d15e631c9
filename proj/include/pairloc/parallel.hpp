#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

namespace pairloc {

/// Worker count: PAIRLOC_WORKERS if set and positive, otherwise
/// std::thread::hardware_concurrency().
std::size_t default_worker_count();

/// Runs body(i) for i in [0, n) on up to `workers` threads (0 = default).
/// Indices are claimed dynamically, so body must only write to slot i of
/// caller-owned storage. Nested calls from inside a worker run serially.
/// The first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t workers = 0);

/// Mixes (seed, stream) into an independent 64-bit seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Neumaier-compensated sum in index order.
double compensated_sum(std::span<const double> values);

}  // namespace pairloc
