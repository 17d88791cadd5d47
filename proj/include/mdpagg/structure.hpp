#pragma once

#include <optional>
#include <vector>

#include "mdpagg/aggregation.hpp"
#include "mdpagg/model.hpp"

namespace mdpagg {

struct DfrResult {
  bool holds = true;
  // Smallest (row, column) where the cumulative row sum increases from
  // row-1 to row; only set when holds is false.
  int row = -1;
  int col = -1;
};

// Decreasing failure rate: partial sums sum_{j<=n} p(i,j) nonincreasing
// in i for every n, within 1e-12.
DfrResult is_dfr(const Matrix& tpm);

// Returns T when the interior policy intervenes exactly on 1..T and
// waits above; the all-wait interior is threshold 0 and all-intervene is
// threshold J. Returns nullopt for non-monotone policies.
std::optional<int> is_threshold(const Policy& policy);

struct GrayAreaReport {
  int lambda1 = 0;               // last state before the gray area
  int lambda0 = 0;               // first wait state after it
  std::vector<int> gray_states;  // { h : lambda1 < h < lambda0 }
  std::optional<int> threshold;  // = lambda1, present iff gray empty
};

// Decomposes an interior policy into intervene region, gray area and
// wait region. Requires both actions present in the interior; throws
// std::invalid_argument for an all-same-action interior.
GrayAreaReport gray_area(const Policy& policy);

struct ConditionViolation {
  int condition = 0;  // 1 = DFR, 2 = partial sums, 3 = reward ratio
  int i = -1;
  int j = -1;
};

struct ConditionReport {
  bool dfr_holds = false;
  bool partial_sum_condition_holds = false;
  bool reward_ratio_condition_holds = false;
  std::optional<ConditionViolation> first_violation;

  bool all_hold() const {
    return dfr_holds && partial_sum_condition_holds && reward_ratio_condition_holds;
  }
};

// Sufficient conditions for an optimal threshold policy on a two-action
// stopping model: (1) the wait TPM is DFR; (2) partial sums over living
// destinations sum_{l=1..g} p(k,l) <= sum_{l=1..g} p(k-1,l) for
// k = 2..J, g = 1..k-1; (3) (r(k,1)-r(k-1,1))/r(k,1) <=
// alpha*(p(k-1,0)-p(k,0)) for k = 2..J, compared cross-multiplied so
// zero rewards are handled.
ConditionReport check_threshold_conditions(const MdpModel& model);

struct PreconditionReport {
  bool sizes_equal = false;
  bool reward_ratio_holds = false;
  std::vector<int> failing_k;  // superstates where the ratio check fails

  bool ok() const { return sizes_equal && reward_ratio_holds; }
};

// Hypotheses under which threshold structure survives aggregation: all
// interior fibers share one size, and for k = 2..K the fiber-mean reward
// ratio (r_Q(k,1)-r_Q(k-1,1))/r_Q(k,1) does not exceed the boundary
// ratio (r(min L_k,1)-r(max L_{k-1},1))/r(min L_k,1).
PreconditionReport check_aggregation_preconditions(const MdpModel& model,
                                                   const Partition& partition);

}  // namespace mdpagg
