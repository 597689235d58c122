#pragma once

#include "gsvr/data/dataset.hpp"
#include "gsvr/embeddings/table.hpp"
#include "gsvr/encoder/gaussian.hpp"
#include "gsvr/model/backbone.hpp"
#include "gsvr/model/config.hpp"
#include "gsvr/model/loss.hpp"
#include "gsvr/priors/priors.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace gsvr::model {

using num::Tensor2;

// Standard-normal draws for the reparameterized samples, (n·L) × latent_dim
// each, instance-major.
struct Noise {
  Tensor2 user;
  Tensor2 item;
};

struct ForwardResult {
  Var predictions;          // (n·samples) × 1
  Eigen::Index samples = 1;
  Var total;                // 1×1, only when the loss was requested
  LossBreakdown loss;
  // Exposed for tests and diagnostics; invalid when the variant lacks them.
  enc::DiagGaussian user_posterior;
  enc::DiagGaussian item_posterior;
  enc::DiagGaussian user_prior;
  enc::DiagGaussian item_prior;
  Var behavior_mode;

  // predictions reshaped to n × samples.
  Tensor2 prediction_matrix() const;
};

Vocab vocab_of(const data::Dataset& ds);

class GsvrModel {
 public:
  GsvrModel(GsvrConfig cfg, Vocab vocab, std::uint64_t seed);
  GsvrModel(const GsvrModel& other);
  GsvrModel& operator=(const GsvrModel& other);
  GsvrModel(GsvrModel&&) noexcept = default;
  GsvrModel& operator=(GsvrModel&&) noexcept = default;

  const GsvrConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }

  // Training pass with explicit noise; L = config().mc_samples samples per
  // instance (1 for Distinct). Computes the full objective.
  ForwardResult forward_train(num::Tape& tape, const data::Batch& batch, const Noise& noise) const;
  // Draws the noise from rng.
  ForwardResult forward_train(num::Tape& tape, const data::Batch& batch, num::Rng& rng) const;
  // Posterior means in place of samples; no loss. Returns n × 1.
  Tensor2 forward_infer(const data::Batch& batch) const;

  Noise draw_noise(std::size_t batch_size, num::Rng& rng) const;
  Noise zero_noise(std::size_t batch_size) const;
  Eigen::Index samples_per_instance() const { return cfg_.samples() ? static_cast<Eigen::Index>(cfg_.mc_samples) : 1; }

  // All parameter tables in a fixed order with unique names.
  std::vector<emb::ParamTable*> parameters();
  std::vector<const emb::ParamTable*> parameters() const;
  // Scenario-keyed embedding tables (u_s, v_s, c_s rows).
  std::vector<emb::ParamTable*> scenario_specific_tables();
  // Expert and gate parameters of the behavior-mode network.
  std::vector<emb::ParamTable*> expert_parameters();

  emb::ScenarioKeyedTable& user_specific() { return user_specific_; }
  emb::ScenarioKeyedTable& item_specific() { return item_specific_; }
  enc::EncoderNet& user_encoder() { return user_encoder_; }
  enc::EncoderNet& item_encoder() { return item_encoder_; }
  prior::BehaviorModeNet& behavior_net() { return behavior_net_; }
  prior::SidePriorNet& side_prior_net() { return side_prior_; }

  void set_backbone(std::unique_ptr<Backbone> backbone) { backbone_ = std::move(backbone); }
  const Backbone& backbone() const { return *backbone_; }

  // Copies weights (and optimizer state) from tables matched by name. Throws
  // CompatibilityError naming the first table whose shape differs or that is
  // missing.
  void load_tables(const std::vector<emb::ParamTable>& tables);

 private:
  struct Embedded;
  Embedded embed(num::Tape& tape, const data::Batch& batch) const;
  ForwardResult run(num::Tape& tape, const data::Batch& batch, const Noise* noise, bool with_loss) const;

  GsvrConfig cfg_;
  Vocab vocab_;

  emb::ParamTable user_shared_;
  emb::ParamTable item_shared_;  // also embeds behavior sequences
  emb::ParamTable scenario_;
  std::vector<emb::ParamTable> side_shared_;
  emb::ScenarioKeyedTable user_specific_;
  emb::ScenarioKeyedTable item_specific_;
  std::vector<emb::ScenarioKeyedTable> side_specific_;

  enc::EncoderNet user_encoder_;
  enc::EncoderNet item_encoder_;
  prior::BehaviorModeNet behavior_net_;
  prior::SidePriorNet side_prior_;
  std::unique_ptr<Backbone> backbone_;
};

// Inference scores for every interaction, in dataset order.
std::vector<double> score_dataset(const GsvrModel& model, const data::Dataset& ds, std::size_t batch_size = 4096);

}  // namespace gsvr::model
