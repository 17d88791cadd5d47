#include "mdpagg/structure.hpp"

#include <algorithm>
#include <stdexcept>

namespace mdpagg {

namespace {
constexpr double kTol = 1e-12;
}

DfrResult is_dfr(const Matrix& tpm) {
  const int n = static_cast<int>(tpm.rows());
  Matrix cumulative = tpm;
  for (int j = 1; j < n; ++j) cumulative.col(j) += cumulative.col(j - 1);
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (cumulative(i, j) > cumulative(i - 1, j) + kTol) return {false, i, j};
  return {};
}

std::optional<int> is_threshold(const Policy& policy) {
  const int J = static_cast<int>(policy.size()) - 2;
  int t = 0;
  while (t < J && policy[t + 1] == kIntervene) ++t;
  for (int h = t + 1; h <= J; ++h)
    if (policy[h] == kIntervene) return std::nullopt;
  return t;
}

GrayAreaReport gray_area(const Policy& policy) {
  const int J = static_cast<int>(policy.size()) - 2;
  int first_zero = 0, last_one = 0;
  bool any_zero = false, any_one = false;
  for (int h = 1; h <= J; ++h) {
    if (policy[h] == kWait && !any_zero) { first_zero = h; any_zero = true; }
    if (policy[h] == kIntervene) { last_one = h; any_one = true; }
  }
  if (!any_zero || !any_one)
    throw std::invalid_argument(
        "gray area is undefined for a single-action interior policy");

  // Psi: down-switch states h with pi(h)=1, pi(h+1)=0, h in 1..J-1.
  int psi_min = -1, psi_max = -1;
  for (int h = 1; h <= J - 1; ++h) {
    if (policy[h] == kIntervene && policy[h + 1] == kWait) {
      if (psi_min < 0) psi_min = h;
      psi_max = h;
    }
  }

  GrayAreaReport report;
  report.lambda1 = psi_min < 0 ? first_zero : std::min(first_zero, psi_min);
  report.lambda0 = psi_max < 0 ? last_one : std::max(last_one, psi_max + 1);
  for (int h = report.lambda1 + 1; h < report.lambda0; ++h)
    report.gray_states.push_back(h);
  if (report.gray_states.empty()) report.threshold = report.lambda1;
  return report;
}

ConditionReport check_threshold_conditions(const MdpModel& model) {
  const int J = model.n_interior();
  const Matrix& p = model.wait_tpm;
  ConditionReport report;

  const DfrResult dfr = is_dfr(p);
  report.dfr_holds = dfr.holds;
  if (!dfr.holds) report.first_violation = ConditionViolation{1, dfr.row, dfr.col};

  report.partial_sum_condition_holds = true;
  for (int k = 2; k <= J && report.partial_sum_condition_holds; ++k) {
    double sum_k = 0.0, sum_prev = 0.0;
    for (int g = 1; g <= k - 1; ++g) {
      sum_k += p(k, g);
      sum_prev += p(k - 1, g);
      if (sum_k > sum_prev + kTol) {
        report.partial_sum_condition_holds = false;
        if (!report.first_violation)
          report.first_violation = ConditionViolation{2, k, g};
        break;
      }
    }
  }

  report.reward_ratio_condition_holds = true;
  for (int k = 2; k <= J; ++k) {
    const double r_k = model.rewards(k, kIntervene);
    const double lhs = r_k - model.rewards(k - 1, kIntervene);
    const double rhs = model.discount * (p(k - 1, 0) - p(k, 0)) * r_k;
    if (lhs > rhs + kTol) {
      report.reward_ratio_condition_holds = false;
      if (!report.first_violation)
        report.first_violation = ConditionViolation{3, k, -1};
      break;
    }
  }
  return report;
}

PreconditionReport check_aggregation_preconditions(const MdpModel& model,
                                                   const Partition& partition) {
  PreconditionReport report;
  report.sizes_equal = true;
  for (int k = 2; k <= partition.K; ++k)
    if (partition.fiber_size(k) != partition.fiber_size(k - 1))
      report.sizes_equal = false;

  const Matrix aggregated = aggregate_rewards(model.rewards, partition);
  report.reward_ratio_holds = true;
  for (int k = 2; k <= partition.K; ++k) {
    const double rq_k = aggregated(k, kIntervene);
    const double lhs = rq_k - aggregated(k - 1, kIntervene);
    const int boundary = partition.fibers[k - 1].first;  // min L_k
    const double r_m = model.rewards(boundary, kIntervene);
    const double rhs = r_m - model.rewards(boundary - 1, kIntervene);
    // (lhs / rq_k) <= (rhs / r_m), cross-multiplied; both rewards are
    // nonnegative life-month totals.
    if (lhs * r_m > rhs * rq_k + kTol) {
      report.reward_ratio_holds = false;
      report.failing_k.push_back(k);
    }
  }
  return report;
}

}  // namespace mdpagg
