#include "mdpagg/aggregation.hpp"

#include <stdexcept>
#include <string>

#include "mdpagg/chain.hpp"

namespace mdpagg {

int Partition::superstate_of(int h) const {
  if (h == 0) return 0;
  if (h == J + 1) return K + 1;
  for (int k = 1; k <= K; ++k)
    if (h >= fibers[k - 1].first && h <= fibers[k - 1].second) return k;
  throw std::invalid_argument("state " + std::to_string(h) + " outside 0..J+1");
}

Partition build_partition(int J, int K) {
  if (K < 1 || K > J)
    throw std::invalid_argument("K must satisfy 1 <= K <= J (K=" +
                                std::to_string(K) + ", J=" + std::to_string(J) + ")");
  const int q = J / K;
  const int rem = J % K;
  Partition partition{J, K, {}};
  int lo = 1;
  for (int k = 1; k <= K; ++k) {
    const int size = k <= K - rem ? q : q + 1;
    partition.fibers.emplace_back(lo, lo + size - 1);
    lo += size;
  }
  return partition;
}

Vector modified_stationary(const Matrix& tpm) {
  const int n = static_cast<int>(tpm.rows());
  Matrix modified = tpm;
  for (int h = 0; h < n; ++h) {
    if (tpm(h, h) == 1.0) {
      modified.row(h).setConstant(1.0 / (n - 1));
      modified(h, h) = 0.0;
    }
  }
  // beta' P = beta' with sum(beta) = 1: replace one stationarity row by
  // the normalization, as in the usual direct solve.
  Matrix a = modified.transpose() - Matrix::Identity(n, n);
  a.row(0).setOnes();
  Vector b = Vector::Zero(n);
  b(0) = 1.0;
  // Full pivoting for the rank check: a rank-deficient system still has
  // solutions with tiny residuals when the chain is reducible.
  Eigen::FullPivLU<Matrix> lu(a);
  Vector beta = lu.solve(b);
  if (!lu.isInvertible() || (a * beta - b).cwiseAbs().maxCoeff() > 1e-8)
    throw std::runtime_error("modified chain has no unique stationary distribution");
  return beta;
}

namespace {

std::vector<std::pair<int, int>> all_groups(const Partition& partition) {
  std::vector<std::pair<int, int>> groups;
  groups.reserve(partition.K + 2);
  groups.emplace_back(0, 0);
  for (const auto& fiber : partition.fibers) groups.push_back(fiber);
  groups.emplace_back(partition.J + 1, partition.J + 1);
  return groups;
}

}  // namespace

Matrix aggregate_tpm(const Matrix& tpm, const Vector& beta, const Partition& partition) {
  if (tpm.rows() != partition.J + 2 || beta.size() != tpm.rows())
    throw std::invalid_argument("aggregate_tpm: dimension mismatch");
  const auto groups = all_groups(partition);
  const int m = static_cast<int>(groups.size());
  Matrix q = Matrix::Zero(m, m);
  for (int k = 0; k < m; ++k) {
    const auto [lo, hi] = groups[k];
    const int len = hi - lo + 1;
    const double weight = beta.segment(lo, len).sum();
    if (!(weight > 0.0))
      throw std::invalid_argument("fiber " + std::to_string(k) +
                                  " has zero total stationary weight");
    for (int kp = 0; kp < m; ++kp) {
      const auto [plo, phi] = groups[kp];
      q(k, kp) = beta.segment(lo, len)
                     .dot(tpm.block(lo, plo, len, phi - plo + 1).rowwise().sum()) /
                 weight;
    }
  }
  return q;
}

Matrix aggregate_rewards(const Matrix& rewards, const Partition& partition) {
  if (rewards.rows() != partition.J + 2)
    throw std::invalid_argument("aggregate_rewards: dimension mismatch");
  Matrix out = Matrix::Zero(partition.K + 2, 2);
  for (int k = 1; k <= partition.K; ++k) {
    const auto [lo, hi] = partition.fibers[k - 1];
    out.row(k) = rewards.middleRows(lo, hi - lo + 1).colwise().mean();
  }
  return out;
}

Policy unaggregate_policy(const Policy& policy_K, const Partition& partition) {
  if (static_cast<int>(policy_K.size()) != partition.K + 2)
    throw std::invalid_argument("unaggregate_policy: policy length mismatch");
  Policy policy(partition.J + 2, kWait);
  policy[0] = policy_K[0];
  policy[partition.J + 1] = policy_K[partition.K + 1];
  for (int k = 1; k <= partition.K; ++k)
    for (int h = partition.fibers[k - 1].first; h <= partition.fibers[k - 1].second; ++h)
      policy[h] = policy_K[k];
  return policy;
}

MdpModel aggregate_model(const MdpModel& full, const Vector& beta,
                         const Partition& partition) {
  MdpModel model;
  model.wait_tpm = aggregate_tpm(full.wait_tpm, beta, partition);
  model.intervene_tpm = build_intervention_tpm(partition.K);
  model.rewards = aggregate_rewards(full.rewards, partition);
  model.discount = full.discount;
  model.validate();
  return model;
}

}  // namespace mdpagg
