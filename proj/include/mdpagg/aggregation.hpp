#pragma once

#include <utility>
#include <vector>

#include "mdpagg/model.hpp"

namespace mdpagg {

// Order-preserving partition of the interior states 1..J into K
// contiguous fibers; the absorbing end states stay singletons and map to
// aggregated states 0 and K+1.
struct Partition {
  int J = 0;
  int K = 0;
  std::vector<std::pair<int, int>> fibers;  // [lo, hi] per superstate 1..K

  int fiber_size(int k) const { return fibers[k - 1].second - fibers[k - 1].first + 1; }

  int superstate_of(int h) const;
};

// Division rule: with J = q*K + rem, the lowest K-rem fibers get q states
// and the highest rem fibers get q+1. Throws unless 1 <= K <= J.
Partition build_partition(int J, int K);

// Stationary distribution of the modified chain in which every absorbing
// row is replaced by uniform mass over the other states. Solved as a
// linear system with a normalization row. Throws std::runtime_error if
// the modified chain has no unique stationary distribution.
Vector modified_stationary(const Matrix& tpm);

// Aggregated TPM: q(k,k') = sum_{h in L_k} beta_h * p(h, L_k') / sum beta_h.
Matrix aggregate_tpm(const Matrix& tpm, const Vector& beta, const Partition& partition);

// Aggregated rewards: unweighted fiber mean per action.
Matrix aggregate_rewards(const Matrix& rewards, const Partition& partition);

// Each original state inherits its superstate's action.
Policy unaggregate_policy(const Policy& policy_K, const Partition& partition);

// Full aggregated model: aggregated wait TPM per the beta weights,
// deterministic intervention jump collapsed to the aggregated space,
// fiber-mean rewards, same discount.
MdpModel aggregate_model(const MdpModel& full, const Vector& beta,
                         const Partition& partition);

}  // namespace mdpagg
