#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "mdpagg/aggregation.hpp"
#include "mdpagg/model.hpp"
#include "mdpagg/rng.hpp"
#include "mdpagg/solve.hpp"

namespace testgen {

using namespace mdpagg;

// Dirichlet(1,...,1) over len outcomes.
inline Vector random_pmf(Xoshiro256pp& rng, int len) {
  Vector v(len);
  double sum = 0.0;
  for (int i = 0; i < len; ++i) {
    v(i) = -std::log(1.0 - rng.uniform());
    sum += v(i);
  }
  return v / sum;
}

// Random wait TPM with decreasing failure rate over states 0..J+1: every
// interior row is a mixture of two fixed distributions whose CDFs are
// ordered pointwise, with mixture weights ascending in the state index,
// so cumulative row sums fall monotonically from row to row. Rows 0 and
// J+1 absorb. Column J+1 carries no wait mass. A small uniform floor
// keeps every interior row strictly positive on 0..J, which makes the
// death-absorbing chain irreducible after the stationary modification.
inline Matrix random_dfr_tpm(Xoshiro256pp& rng, int J) {
  const int n = J + 2;
  const Vector a = random_pmf(rng, J + 1);
  const Vector b = random_pmf(rng, J + 1);
  Vector cum_hi(J + 1), cum_lo(J + 1);
  double ca = 0.0, cb = 0.0;
  for (int j = 0; j <= J; ++j) {
    ca += a(j);
    cb += b(j);
    cum_hi(j) = std::max(ca, cb);
    cum_lo(j) = std::min(ca, cb);
  }
  // Ascending mixture weights in (0,1).
  std::vector<double> theta(static_cast<std::size_t>(J));
  for (auto& t : theta) t = rng.uniform();
  std::sort(theta.begin(), theta.end());

  Matrix p = Matrix::Zero(n, n);
  p(0, 0) = 1.0;
  p(n - 1, n - 1) = 1.0;
  const double floor_mass = 0.05;
  for (int i = 1; i <= J; ++i) {
    const double t = theta[static_cast<std::size_t>(i - 1)];
    double prev = 0.0;
    for (int j = 0; j <= J; ++j) {
      const double cdf = (1.0 - t) * cum_hi(j) + t * cum_lo(j);
      const double mixed = (1.0 - floor_mass) * (cdf - prev) +
                           floor_mass / static_cast<double>(J + 1);
      p(i, j) = mixed;
      prev = cdf;
    }
  }
  return p;
}

// Random contiguous partition of 1..J into K fibers with arbitrary cuts.
inline Partition random_partition(Xoshiro256pp& rng, int J) {
  const int K = 1 + static_cast<int>(rng.uniform() * J);
  std::vector<int> cuts;  // fiber upper bounds
  std::vector<bool> used(static_cast<std::size_t>(J), false);
  used[static_cast<std::size_t>(J - 1)] = true;
  int placed = 1;
  while (placed < K) {
    const int c = 1 + static_cast<int>(rng.uniform() * (J - 1));
    if (!used[static_cast<std::size_t>(c - 1)]) {
      used[static_cast<std::size_t>(c - 1)] = true;
      ++placed;
    }
  }
  Partition partition{J, K, {}};
  int lo = 1;
  for (int h = 1; h <= J; ++h) {
    if (used[static_cast<std::size_t>(h - 1)]) {
      partition.fibers.emplace_back(lo, h);
      lo = h + 1;
    }
  }
  return partition;
}

// Unstructured two-action model: random rows everywhere in the interior,
// absorbing end states, rewards in [0,1] on interior rows.
inline MdpModel random_mdp(Xoshiro256pp& rng, int n_interior, double discount) {
  const int n = n_interior + 2;
  MdpModel model;
  model.discount = discount;
  model.rewards = Matrix::Zero(n, 2);
  for (Matrix* tpm : {&model.wait_tpm, &model.intervene_tpm}) {
    *tpm = Matrix::Zero(n, n);
    (*tpm)(0, 0) = 1.0;
    (*tpm)(n - 1, n - 1) = 1.0;
    for (int i = 1; i <= n_interior; ++i) tpm->row(i) = random_pmf(rng, n).transpose();
  }
  for (int i = 1; i <= n_interior; ++i) {
    model.rewards(i, 0) = rng.uniform();
    model.rewards(i, 1) = rng.uniform();
  }
  model.validate();
  return model;
}

// Componentwise-maximal value vector over every deterministic interior
// policy; the exit gate for solver correctness on small models.
inline Vector brute_force_values(const MdpModel& model) {
  const int n = model.n_states();
  const int interior = n - 2;
  Vector best = Vector::Constant(n, -std::numeric_limits<double>::infinity());
  for (unsigned mask = 0; mask < (1u << interior); ++mask) {
    Policy policy(static_cast<std::size_t>(n), kWait);
    for (int h = 1; h <= interior; ++h)
      if (mask & (1u << (h - 1))) policy[h] = kIntervene;
    const Vector v = evaluate_policy(model, policy);
    best = best.cwiseMax(v);
  }
  return best;
}

// Independent threshold enumeration: best value at compare state over
// the K+1 threshold policies, smallest maximizer.
inline std::pair<int, Vector> enumerate_thresholds(const MdpModel& model,
                                                   int compare_state) {
  const int top = model.n_states() - 2;
  const int cs = compare_state < 0 ? top : compare_state;
  int best_t = 0;
  Vector best_v;
  for (int T = 0; T <= top; ++T) {
    Policy policy(static_cast<std::size_t>(model.n_states()), kWait);
    for (int h = 1; h <= T; ++h) policy[h] = kIntervene;
    Vector v = evaluate_policy(model, policy);
    if (T == 0 || v(cs) > best_v(cs) + 1e-12) {
      best_t = T;
      best_v = std::move(v);
    }
  }
  return {best_t, std::move(best_v)};
}

}  // namespace testgen
