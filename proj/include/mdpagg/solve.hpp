#pragma once

#include <stdexcept>

#include "mdpagg/model.hpp"

namespace mdpagg {

struct Solution {
  Policy policy;
  Vector values;
};

enum class Method { policy_iteration, value_iteration };

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exact policy evaluation: the unique v with v = r_pi + alpha * P_pi * v,
// solved by LU factorization. Throws on dimension mismatch.
Vector evaluate_policy(const MdpModel& model, const Policy& policy);

// r(h,a) + alpha * sum_h' p^a(h,h') v(h').
double q_value(const MdpModel& model, const Vector& values, int h, int a);

// Optimal policy and value function. Argmax ties break toward wait: a
// state switches to intervene only when q1 exceeds q0 by more than 1e-10.
// Policy iteration (exact evaluation each round) is the default; value
// iteration stops when the span of successive differences drops below
// eps*(1-alpha)/(2*alpha) with eps = 1e-6 and throws SolverError if the
// iteration cap is hit first.
Solution solve_optimal(const MdpModel& model,
                       Method method = Method::policy_iteration);

}  // namespace mdpagg
