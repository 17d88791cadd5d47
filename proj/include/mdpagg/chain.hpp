#pragma once

#include "mdpagg/model.hpp"

namespace mdpagg {

// Parameters of the deteriorating-health chain. States 1..J order health
// from worst to best; mu is the probability of staying put for one
// month, decline probabilities fall off geometrically with ratio gamma,
// improvement probabilities with the derived ratio lambda.
struct ChainParams {
  int J = 100;
  double mu = 0.1;
  double gamma = 0.85;
  double alpha = 0.9975;
  // Expected remaining life-months granted by intervening at the best
  // state: beta = r(J, 1).
  double terminal_intervention_reward = 40.0;

  double lambda() const { return (1.0 - mu - gamma) / (1.0 - gamma - mu * gamma); }

  // Throws std::invalid_argument if J < 1, any rate is outside [0,1],
  // alpha is outside (0,1), or the row-sum identity
  // mu*(1-gamma*lambda) / ((1-gamma)*(1-lambda)) = 1 fails by > 1e-10.
  void validate() const;
};

// Natural-history TPM (action 0): row 0 and row J+1 absorb at self; for
// an interior state i, the death probability is the geometric tail
// mu*gamma^i/(1-gamma), decline to j < i has mu*gamma^(i-j), staying has
// mu, improvement to j in (i, J) has mu*lambda^(j-i), and column J takes
// the upper tail mu*lambda^(J-i)/(1-lambda). Column J+1 is zero.
Matrix build_natural_tpm(const ChainParams& params);

// Intervention TPM (action 1): every interior state jumps to the
// post-intervention state J+1 with probability 1.
Matrix build_intervention_tpm(int J);

// Rewards: r(h,0) = 1 for interior h, both end states earn 0 for both
// actions, r(J,1) is the terminal intervention reward, and lower states
// follow r(h,1) = (1 - alpha*(p(h,0) - p(h+1,0))) * r(h+1,1) where p is
// the natural TPM's death column.
Matrix build_rewards(const ChainParams& params, const Matrix& natural_tpm);

// Assembles the full model from the three builders.
MdpModel build_ground_truth(const ChainParams& params);

}  // namespace mdpagg
