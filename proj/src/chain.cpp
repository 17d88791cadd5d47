#include "mdpagg/chain.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mdpagg {

void ChainParams::validate() const {
  if (J < 1) throw std::invalid_argument("J must be at least 1");
  if (!(mu >= 0.0 && mu <= 1.0) || !(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("mu and gamma must lie in [0,1]");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must lie in (0,1)");
  const double lam = lambda();
  if (!(lam >= 0.0 && lam <= 1.0))
    throw std::invalid_argument("derived lambda " + std::to_string(lam) +
                                " falls outside [0,1]");
  // Telescoping identity that makes every interior row sum to one.
  const double identity = mu * (1.0 - gamma * lam) / ((1.0 - gamma) * (1.0 - lam));
  if (std::abs(identity - 1.0) > 1e-10)
    throw std::invalid_argument("row-sum identity violated for (mu, gamma)");
}

Matrix build_natural_tpm(const ChainParams& params) {
  params.validate();
  const int J = params.J;
  const int n = J + 2;
  const double mu = params.mu, gamma = params.gamma, lam = params.lambda();
  Matrix p = Matrix::Zero(n, n);
  p(0, 0) = 1.0;
  p(n - 1, n - 1) = 1.0;
  for (int i = 1; i <= J; ++i) {
    p(i, 0) = mu * std::pow(gamma, i) / (1.0 - gamma);
    for (int j = 1; j < i; ++j) p(i, j) = mu * std::pow(gamma, i - j);
    if (i < J) {
      p(i, i) = mu;
      for (int j = i + 1; j < J; ++j) p(i, j) = mu * std::pow(lam, j - i);
    }
    // Tail lump at the best state; at i = J it subsumes the diagonal.
    p(i, J) = mu * std::pow(lam, J - i) / (1.0 - lam);
  }
  return p;
}

Matrix build_intervention_tpm(int J) {
  if (J < 1) throw std::invalid_argument("J must be at least 1");
  const int n = J + 2;
  Matrix p = Matrix::Zero(n, n);
  p(0, 0) = 1.0;
  p(n - 1, n - 1) = 1.0;
  for (int i = 1; i <= J; ++i) p(i, n - 1) = 1.0;
  return p;
}

Matrix build_rewards(const ChainParams& params, const Matrix& natural_tpm) {
  const int J = params.J;
  if (natural_tpm.rows() != J + 2)
    throw std::invalid_argument("natural TPM does not match J");
  Matrix r = Matrix::Zero(J + 2, 2);
  for (int h = 1; h <= J; ++h) r(h, kWait) = 1.0;
  r(J, kIntervene) = params.terminal_intervention_reward;
  for (int h = J - 1; h >= 1; --h)
    r(h, kIntervene) = (1.0 - params.alpha * (natural_tpm(h, 0) - natural_tpm(h + 1, 0))) *
                       r(h + 1, kIntervene);
  return r;
}

MdpModel build_ground_truth(const ChainParams& params) {
  MdpModel model;
  model.wait_tpm = build_natural_tpm(params);
  model.intervene_tpm = build_intervention_tpm(params.J);
  model.rewards = build_rewards(params, model.wait_tpm);
  model.discount = params.alpha;
  model.validate();
  return model;
}

}  // namespace mdpagg
