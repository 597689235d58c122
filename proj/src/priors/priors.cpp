#include "gsvr/priors/priors.hpp"

#include "gsvr/errors.hpp"
#include "gsvr/numerics/ops.hpp"

namespace gsvr::prior {

void MoEConfig::validate() const {
  if (shared_experts < 1 || specific_experts < 1) throw ConfigError("moe: need at least one expert of each kind");
  if (expert_hidden < 1 || expert_out < 1) throw ConfigError("moe: expert widths must be >= 1");
}

BehaviorModeNet make_behavior_mode_net(const MoEConfig& cfg, std::size_t seq_dim, std::size_t scenario_dim,
                                       std::size_t prior_in, std::size_t prior_hidden, std::size_t latent_dim,
                                       num::Rng& rng, bool with_experts) {
  cfg.validate();
  BehaviorModeNet net;
  if (with_experts) {
    for (std::size_t i = 0; i < cfg.shared_experts; ++i) {
      net.shared_experts.push_back(
          nn::make_mlp("moe.shared." + std::to_string(i), {seq_dim, cfg.expert_hidden, cfg.expert_out}, rng));
    }
    for (std::size_t i = 0; i < cfg.specific_experts; ++i) {
      net.specific_experts.push_back(nn::make_mlp("moe.specific." + std::to_string(i),
                                                  {seq_dim + scenario_dim, cfg.expert_hidden, cfg.expert_out}, rng));
    }
    net.shared_gate = nn::make_dense("moe.gate_shared", seq_dim, cfg.shared_experts, rng);
    net.specific_gate = nn::make_dense("moe.gate_specific", seq_dim + scenario_dim, cfg.specific_experts, rng);
  }
  if (prior_in > 0) net.prior_heads = enc::make_gaussian_heads("user_prior", prior_in, prior_hidden, latent_dim, rng);
  return net;
}

void collect_experts(BehaviorModeNet& net, std::vector<emb::ParamTable*>& out) {
  for (auto& e : net.shared_experts) nn::collect(e, out);
  for (auto& e : net.specific_experts) nn::collect(e, out);
  if (!net.shared_experts.empty()) {
    nn::collect(net.shared_gate, out);
    nn::collect(net.specific_gate, out);
  }
}

void collect(BehaviorModeNet& net, std::vector<emb::ParamTable*>& out) {
  collect_experts(net, out);
  enc::collect(net.prior_heads, out);
}

SidePriorNet make_side_prior_net(std::size_t in_dim, std::size_t hidden, std::size_t latent_dim, num::Rng& rng) {
  return SidePriorNet{enc::make_gaussian_heads("item_prior", in_dim, hidden, latent_dim, rng)};
}

void collect(SidePriorNet& net, std::vector<emb::ParamTable*>& out) { enc::collect(net.heads, out); }

Var aggregate_sequence(Var behaviors, std::span<const std::size_t> offsets) {
  return num::segment_mean(behaviors, offsets);
}

Var aggregate_sequence(Var behaviors) {
  const std::size_t offsets[2] = {0, static_cast<std::size_t>(behaviors.rows())};
  return num::segment_mean(behaviors, offsets);
}

namespace {
Var mixture(num::Tape& tape, const std::vector<nn::Mlp>& experts, Var gate, Var input) {
  Var acc;
  for (std::size_t i = 0; i < experts.size(); ++i) {
    Var weighted = num::mul_col(nn::forward(tape, experts[i], input),
                                num::slice_cols(gate, static_cast<Eigen::Index>(i), 1));
    acc = acc.valid() ? num::add(acc, weighted) : weighted;
  }
  return acc;
}
}  // namespace

Var behavior_mode(num::Tape& tape, const BehaviorModeNet& net, Var h, Var s_emb, GateWeights* gates) {
  if (net.shared_experts.empty()) throw ContractError("behavior_mode: network was built without experts");
  if (h.rows() != s_emb.rows()) {
    throw DimensionError("behavior_mode: h " + num::shape_string(h.value()) + " and s " +
                         num::shape_string(s_emb.value()) + " are not row-aligned");
  }
  Var hs = num::concat({h, s_emb});
  Var alpha_c = num::softmax(nn::forward(tape, net.shared_gate, h));
  Var alpha_s = num::softmax(nn::forward(tape, net.specific_gate, hs));
  if (gates) *gates = {alpha_c, alpha_s};
  return num::concat({mixture(tape, net.shared_experts, alpha_c, h), mixture(tape, net.specific_experts, alpha_s, hs)});
}

DiagGaussian user_prior(num::Tape& tape, const BehaviorModeNet& net, Var mode) {
  return enc::encode(tape, net.prior_heads, mode);
}

DiagGaussian item_prior(num::Tape& tape, const SidePriorNet& net, Var side_specific, Var side_shared) {
  if (side_specific.rows() != side_shared.rows()) {
    throw DimensionError("item_prior: c_s and c are not row-aligned");
  }
  return enc::encode(tape, net.heads, num::concat({side_specific, side_shared}));
}

}  // namespace gsvr::prior
