#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mdpagg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Action a = 0 is "wait", a = 1 is "intervene". One action per state.
using Policy = std::vector<int>;

constexpr int kWait = 0;
constexpr int kIntervene = 1;

// Discounted two-action MDP over an ordered state space 0..n-1 where
// state 0 (death) and state n-1 (post-intervention) are absorbing and
// states 1..n-2 are the interior health states, ascending in goodness.
struct MdpModel {
  Matrix wait_tpm;        // action 0, n x n, row-stochastic
  Matrix intervene_tpm;   // action 1, n x n, row-stochastic
  Matrix rewards;         // n x 2, column per action, life-months
  double discount = 0.0;  // alpha in (0, 1)

  int n_states() const { return static_cast<int>(wait_tpm.rows()); }
  int n_interior() const { return n_states() - 2; }

  const Matrix& tpm(int action) const {
    return action == kWait ? wait_tpm : intervene_tpm;
  }

  // Throws std::invalid_argument on inconsistent dimensions, a discount
  // outside (0,1), rows off stochastic by more than 1e-10, or absorbing
  // end rows that are not one-hot at self.
  void validate() const;
};

}  // namespace mdpagg
