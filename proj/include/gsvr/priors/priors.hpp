#pragma once

#include "gsvr/encoder/gaussian.hpp"
#include "gsvr/nn/mlp.hpp"

#include <span>
#include <vector>

namespace gsvr::prior {

using enc::DiagGaussian;
using num::Var;

struct MoEConfig {
  std::size_t shared_experts = 2;    // d_c
  std::size_t specific_experts = 2;  // d_s
  std::size_t expert_hidden = 64;
  std::size_t expert_out = 20;

  void validate() const;
};

// Shared experts see h; specific experts and their gate see h ⊕ s. The
// resulting behavior mode feeds the user-prior heads.
struct BehaviorModeNet {
  std::vector<nn::Mlp> shared_experts;
  std::vector<nn::Mlp> specific_experts;
  nn::Dense shared_gate;
  nn::Dense specific_gate;
  enc::GaussianHeads prior_heads;

  std::size_t mode_dim() const { return shared_experts.empty() ? 0 : 2 * shared_experts.front().out_dim(); }
};

// seq_dim: width of h; scenario_dim: width of s; prior_in: width consumed by
// the prior heads (mode_dim for the full model, seq_dim when experts are
// bypassed, 0 for no prior heads).
BehaviorModeNet make_behavior_mode_net(const MoEConfig& cfg, std::size_t seq_dim, std::size_t scenario_dim,
                                       std::size_t prior_in, std::size_t prior_hidden, std::size_t latent_dim,
                                       num::Rng& rng, bool with_experts = true);
void collect(BehaviorModeNet& net, std::vector<emb::ParamTable*>& out);
void collect_experts(BehaviorModeNet& net, std::vector<emb::ParamTable*>& out);

struct SidePriorNet {
  enc::GaussianHeads heads;
};

SidePriorNet make_side_prior_net(std::size_t in_dim, std::size_t hidden, std::size_t latent_dim, num::Rng& rng);
void collect(SidePriorNet& net, std::vector<emb::ParamTable*>& out);

// Mean pooling over consecutive segments of behavior embeddings; empty
// segments give zero rows.
Var aggregate_sequence(Var behaviors, std::span<const std::size_t> offsets);
// Single-sequence form: [N_b × d] -> [1 × d].
Var aggregate_sequence(Var behaviors);

struct GateWeights {
  Var shared;
  Var specific;
};

// b_us = (Σ α_c,i E_c,i(h)) ⊕ (Σ α_s,i E_s,i(h ⊕ s)).
Var behavior_mode(num::Tape& tape, const BehaviorModeNet& net, Var h, Var s_emb, GateWeights* gates = nullptr);

DiagGaussian user_prior(num::Tape& tape, const BehaviorModeNet& net, Var mode);
DiagGaussian item_prior(num::Tape& tape, const SidePriorNet& net, Var side_specific, Var side_shared);

}  // namespace gsvr::prior
