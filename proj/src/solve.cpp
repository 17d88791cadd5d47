#include "mdpagg/solve.hpp"

#include <cmath>
#include <string>

namespace mdpagg {

namespace {

constexpr double kTieEps = 1e-10;  // wait wins unless intervene is better by this
constexpr int kPolicyIterationCap = 10000;
constexpr int kValueIterationCap = 2000000;

void check_policy(const MdpModel& model, const Policy& policy) {
  if (static_cast<int>(policy.size()) != model.n_states())
    throw std::invalid_argument("policy length " + std::to_string(policy.size()) +
                                " does not match state count " +
                                std::to_string(model.n_states()));
}

}  // namespace

void MdpModel::validate() const {
  const auto n = wait_tpm.rows();
  if (n < 3 || wait_tpm.cols() != n || intervene_tpm.rows() != n ||
      intervene_tpm.cols() != n || rewards.rows() != n || rewards.cols() != 2)
    throw std::invalid_argument("model matrices have inconsistent dimensions");
  if (!(discount > 0.0 && discount < 1.0))
    throw std::invalid_argument("discount must lie in (0,1)");
  for (const Matrix* tpm : {&wait_tpm, &intervene_tpm}) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(tpm->row(i).sum() - 1.0) > 1e-10)
        throw std::invalid_argument("row " + std::to_string(i) +
                                    " does not sum to 1");
      if (tpm->row(i).minCoeff() < -1e-15 || tpm->row(i).maxCoeff() > 1.0 + 1e-12)
        throw std::invalid_argument("row " + std::to_string(i) +
                                    " has entries outside [0,1]");
    }
    if ((*tpm)(0, 0) != 1.0 || (*tpm)(n - 1, n - 1) != 1.0)
      throw std::invalid_argument("end states must absorb at self");
  }
}

Vector evaluate_policy(const MdpModel& model, const Policy& policy) {
  check_policy(model, policy);
  const int n = model.n_states();
  Matrix a = Matrix::Identity(n, n);
  Vector r(n);
  for (int h = 0; h < n; ++h) {
    a.row(h) -= model.discount * model.tpm(policy[h]).row(h);
    r(h) = model.rewards(h, policy[h]);
  }
  return a.partialPivLu().solve(r);
}

double q_value(const MdpModel& model, const Vector& values, int h, int a) {
  if (h < 0 || h >= model.n_states() || (a != kWait && a != kIntervene))
    throw std::invalid_argument("q_value: state or action out of range");
  return model.rewards(h, a) + model.discount * model.tpm(a).row(h).dot(values);
}

namespace {

Policy greedy_policy(const MdpModel& model, const Vector& values) {
  const int n = model.n_states();
  Vector q0 = model.rewards.col(0) + model.discount * (model.wait_tpm * values);
  Vector q1 = model.rewards.col(1) + model.discount * (model.intervene_tpm * values);
  Policy policy(n, kWait);
  for (int h = 0; h < n; ++h)
    if (q1(h) > q0(h) + kTieEps) policy[h] = kIntervene;
  return policy;
}

Solution solve_policy_iteration(const MdpModel& model) {
  Policy policy(model.n_states(), kWait);
  for (int iter = 0; iter < kPolicyIterationCap; ++iter) {
    Vector values = evaluate_policy(model, policy);
    Policy improved = greedy_policy(model, values);
    if (improved == policy) return {std::move(policy), std::move(values)};
    policy = std::move(improved);
  }
  throw SolverError("policy iteration failed to converge");
}

Solution solve_value_iteration(const MdpModel& model) {
  const int n = model.n_states();
  const double alpha = model.discount;
  const double stop = 1e-6 * (1.0 - alpha) / (2.0 * alpha);
  Vector v = Vector::Zero(n);
  for (int iter = 0; iter < kValueIterationCap; ++iter) {
    Vector q0 = model.rewards.col(0) + alpha * (model.wait_tpm * v);
    Vector q1 = model.rewards.col(1) + alpha * (model.intervene_tpm * v);
    Vector next = q0.cwiseMax(q1);
    Vector diff = next - v;
    v = std::move(next);
    if (diff.maxCoeff() - diff.minCoeff() < stop) {
      Policy policy = greedy_policy(model, v);
      return {policy, evaluate_policy(model, policy)};
    }
  }
  throw SolverError("value iteration failed to converge within cap");
}

}  // namespace

Solution solve_optimal(const MdpModel& model, Method method) {
  return method == Method::policy_iteration ? solve_policy_iteration(model)
                                            : solve_value_iteration(model);
}

}  // namespace mdpagg
