#pragma once

#include "gsvr/nn/mlp.hpp"
#include "gsvr/numerics/tape.hpp"

#include <string>

namespace gsvr::enc {

using num::Tensor2;
using num::Var;

// Diagonal Gaussian with one distribution per row: N(mean, std^2).
struct DiagGaussian {
  Var mean;
  Var std;
};

inline constexpr double kLogVarClip = 10.0;

// Two perceptron heads producing (mean, logvar) from an input row. Used for
// the user/item posteriors and for both prior networks.
struct GaussianHeads {
  nn::Mlp mean_head;
  nn::Mlp logvar_head;

  std::size_t in_dim() const { return mean_head.in_dim(); }
  std::size_t latent_dim() const { return mean_head.out_dim(); }
};

using EncoderNet = GaussianHeads;

GaussianHeads make_gaussian_heads(const std::string& name, std::size_t in_dim, std::size_t hidden,
                                  std::size_t latent_dim, num::Rng& rng);
void collect(GaussianHeads& heads, std::vector<emb::ParamTable*>& out);
void zero_out(GaussianHeads& heads);

// mean = mean_head(e); std = exp(0.5 * clip(logvar_head(e), -10, 10)).
DiagGaussian encode(num::Tape& tape, const GaussianHeads& net, Var e);

// mean + std ⊙ eps; eps is treated as a constant.
Var reparam_sample(const DiagGaussian& g, Var eps);

// Per-row KL(q || p), [n × 1].
Var kl_diag(const DiagGaussian& q, const DiagGaussian& p);
// Per-row KL(q || N(0, I)) = ½ Σ (μ² + σ² − ln σ² − 1).
Var kl_to_standard(const DiagGaussian& q);

// N(0, I) with the given shape, as tape constants.
DiagGaussian standard_normal(num::Tape& tape, Eigen::Index rows, Eigen::Index cols);

}  // namespace gsvr::enc
