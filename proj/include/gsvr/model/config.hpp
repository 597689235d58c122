#pragma once

#include "gsvr/priors/priors.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace gsvr::model {

// Full: posteriors regularized toward behavior/side-feature priors.
// Distinct: scenario-specific embeddings used directly, no KL terms.
// Uniform: posteriors regularized toward N(0, I).
// RMoE: user prior conditioned on the pooled sequence, experts removed.
enum class Variant { Full, Distinct, Uniform, RMoE };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);

struct GsvrConfig {
  std::size_t embed_dim = 40;
  std::size_t latent_dim = 40;
  std::vector<std::size_t> mlp_hidden = {256, 128, 64};
  std::size_t encoder_hidden = 64;
  std::size_t prior_hidden = 64;
  double alpha = 0.5;
  std::size_t mc_samples = 5;
  Variant variant = Variant::Full;
  prior::MoEConfig moe;

  void validate() const;
  bool samples() const { return variant != Variant::Distinct; }
};

// Vocabulary sizes the parameter tables are built for.
struct Vocab {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::size_t num_scenarios = 0;
  std::vector<std::size_t> side_vocab;

  bool operator==(const Vocab&) const = default;
};

}  // namespace gsvr::model
