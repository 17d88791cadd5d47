#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mdpagg/aggregation.hpp"
#include "mdpagg/model.hpp"

namespace mdpagg {

// Observed wait-action transition counts; rows for the absorbing end
// states stay all-zero.
using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

struct TrajectoryBatch {
  int M = 0;
  std::uint64_t seed = 0;
  // Each trajectory starts at J and ends at the first visit to state 0.
  std::vector<std::vector<int>> paths;
};

struct SimResult {
  TrajectoryBatch batch;
  CountMatrix counts;
};

// Simulates M trajectories of the natural chain from the best state J
// until absorption at 0, tallying every observed transition. Trajectory
// m draws from its own stream derived as derive_seed(seed, m), so the
// result is independent of execution order. Throws std::runtime_error if
// any trajectory exceeds 1e6 steps (malformed chains only).
SimResult simulate_trajectories(const Matrix& natural_tpm, int M, std::uint64_t seed);

// Fill-in rule for interior rows with no observations.
enum class ZeroRowPolicy { uniform, self, death };

ZeroRowPolicy zero_row_policy_from_string(const std::string& name);
std::string to_string(ZeroRowPolicy policy);

// Row-normalized counts; absorbing end rows one-hot at self; interior
// zero rows filled per policy (uniform spreads over states 0..J, leaving
// the structurally unreachable post-intervention column at zero).
Matrix mle_full(const CountMatrix& counts, ZeroRowPolicy policy = ZeroRowPolicy::uniform);

// Fiber-pooled counts row-normalized at the aggregated level; the
// zero-row policy applies per superstate. Pooling uses integer sums, so
// the identity partition reproduces mle_full bit for bit.
Matrix mle_aggregated(const CountMatrix& counts, const Partition& partition,
                      ZeroRowPolicy policy = ZeroRowPolicy::uniform);

// CSV exchange format: "# states=N" header then "i,j,count" triples for
// the nonzero cells.
void write_counts_csv(const std::string& path, const CountMatrix& counts);
CountMatrix read_counts_csv(const std::string& path);

}  // namespace mdpagg
