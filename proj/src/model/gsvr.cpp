#include "gsvr/model/gsvr.hpp"

#include "gsvr/errors.hpp"
#include "gsvr/numerics/ops.hpp"

#include <map>

namespace gsvr::model {

Vocab vocab_of(const data::Dataset& ds) {
  return Vocab{ds.num_users(), ds.num_items(), ds.num_scenarios, ds.side_vocab_sizes()};
}

Tensor2 ForwardResult::prediction_matrix() const {
  const Tensor2& p = predictions.value();
  Tensor2 out(p.rows() / samples, samples);
  for (Eigen::Index i = 0; i < p.rows(); ++i) out(i / samples, i % samples) = p(i, 0);
  return out;
}

GsvrModel::GsvrModel(GsvrConfig cfg, Vocab vocab, std::uint64_t seed) : cfg_(std::move(cfg)), vocab_(std::move(vocab)) {
  cfg_.validate();
  if (vocab_.num_users == 0 || vocab_.num_items == 0 || vocab_.num_scenarios == 0 || vocab_.side_vocab.empty()) {
    throw ConfigError("model vocabulary must have users, items, scenarios and at least one side-feature slot");
  }
  num::Rng rng = num::Rng::stream(seed, num::Stream::Init);
  const std::size_t d = cfg_.embed_dim;
  const std::size_t M = vocab_.num_scenarios;
  const std::size_t slots = vocab_.side_vocab.size();

  user_shared_ = emb::xavier_init("user", vocab_.num_users, d, rng);
  item_shared_ = emb::xavier_init("item", vocab_.num_items, d, rng);
  scenario_ = emb::xavier_init("scenario", M, d, rng);
  for (std::size_t k = 0; k < slots; ++k) {
    side_shared_.push_back(emb::xavier_init("side." + std::to_string(k), vocab_.side_vocab[k], d, rng));
  }
  user_specific_ = emb::xavier_init_keyed("user_s", vocab_.num_users, M, d, rng);
  item_specific_ = emb::xavier_init_keyed("item_s", vocab_.num_items, M, d, rng);
  for (std::size_t k = 0; k < slots; ++k) {
    side_specific_.push_back(emb::xavier_init_keyed("side_s." + std::to_string(k), vocab_.side_vocab[k], M, d, rng));
  }

  const bool posterior = cfg_.variant != Variant::Distinct;
  const bool experts = cfg_.variant != Variant::RMoE;
  const bool learned_priors = cfg_.variant == Variant::Full || cfg_.variant == Variant::RMoE;
  if (posterior) {
    user_encoder_ = enc::make_gaussian_heads("user_post", d, cfg_.encoder_hidden, cfg_.latent_dim, rng);
    item_encoder_ = enc::make_gaussian_heads("item_post", d, cfg_.encoder_hidden, cfg_.latent_dim, rng);
  }
  const std::size_t mode_dim = experts ? 2 * cfg_.moe.expert_out : d;
  std::size_t prior_in = 0;
  if (learned_priors) prior_in = experts ? mode_dim : d;
  behavior_net_ = prior::make_behavior_mode_net(cfg_.moe, d, d, prior_in, cfg_.prior_hidden, cfg_.latent_dim, rng,
                                                experts);
  if (learned_priors) {
    side_prior_ = prior::make_side_prior_net(2 * slots * d, cfg_.prior_hidden, cfg_.latent_dim, rng);
  }

  const std::size_t specific_dim = posterior ? cfg_.latent_dim : d;
  backbone_ = std::make_unique<MlpBackbone>(
      std::array<std::size_t, 8>{d, specific_dim, d, specific_dim, mode_dim, slots * d, slots * d, d}, cfg_.mlp_hidden,
      rng);
}

GsvrModel::GsvrModel(const GsvrModel& other)
    : cfg_(other.cfg_),
      vocab_(other.vocab_),
      user_shared_(other.user_shared_),
      item_shared_(other.item_shared_),
      scenario_(other.scenario_),
      side_shared_(other.side_shared_),
      user_specific_(other.user_specific_),
      item_specific_(other.item_specific_),
      side_specific_(other.side_specific_),
      user_encoder_(other.user_encoder_),
      item_encoder_(other.item_encoder_),
      behavior_net_(other.behavior_net_),
      side_prior_(other.side_prior_),
      backbone_(other.backbone_->clone()) {}

GsvrModel& GsvrModel::operator=(const GsvrModel& other) {
  if (this != &other) {
    GsvrModel copy(other);
    *this = std::move(copy);
  }
  return *this;
}

std::vector<emb::ParamTable*> GsvrModel::parameters() {
  std::vector<emb::ParamTable*> out{&user_shared_, &item_shared_, &scenario_};
  for (auto& t : side_shared_) out.push_back(&t);
  out.push_back(&user_specific_.base());
  out.push_back(&item_specific_.base());
  for (auto& t : side_specific_) out.push_back(&t.base());
  enc::collect(user_encoder_, out);
  enc::collect(item_encoder_, out);
  prior::collect(behavior_net_, out);
  prior::collect(side_prior_, out);
  backbone_->collect(out);
  return out;
}

std::vector<const emb::ParamTable*> GsvrModel::parameters() const {
  auto mutable_params = const_cast<GsvrModel*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

std::vector<emb::ParamTable*> GsvrModel::scenario_specific_tables() {
  std::vector<emb::ParamTable*> out{&user_specific_.base(), &item_specific_.base()};
  for (auto& t : side_specific_) out.push_back(&t.base());
  return out;
}

std::vector<emb::ParamTable*> GsvrModel::expert_parameters() {
  std::vector<emb::ParamTable*> out;
  prior::collect_experts(behavior_net_, out);
  return out;
}

void GsvrModel::load_tables(const std::vector<emb::ParamTable>& tables) {
  std::map<std::string, const emb::ParamTable*> by_name;
  for (const auto& t : tables) by_name[t.name] = &t;
  for (emb::ParamTable* p : parameters()) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw CompatibilityError("checkpoint is missing table '" + p->name + "'");
    const emb::ParamTable& src = *it->second;
    if (src.vocab_size() != p->vocab_size() || src.dim() != p->dim()) {
      throw CompatibilityError("table '" + p->name + "' has shape " + std::to_string(src.vocab_size()) + "x" +
                               std::to_string(src.dim()) + " in the checkpoint but the model expects " +
                               std::to_string(p->vocab_size()) + "x" + std::to_string(p->dim()));
    }
    *p = src;
  }
}

struct GsvrModel::Embedded {
  Var user, item, scenario, side, side_specific;
  Var user_specific_raw, item_specific_raw;
  Var seq;  // mean-pooled behaviors, n × d
};

GsvrModel::Embedded GsvrModel::embed(num::Tape& tape, const data::Batch& batch) const {
  const std::size_t n = batch.size();
  const std::size_t M = vocab_.num_scenarios;
  Embedded e;
  e.user = emb::lookup(tape, user_shared_, batch.users);
  e.item = emb::lookup(tape, item_shared_, batch.items);
  e.scenario = emb::lookup(tape, scenario_, batch.scenarios);

  std::vector<std::size_t> keyed(n);
  for (std::size_t i = 0; i < n; ++i) keyed[i] = user_specific_.index(batch.users[i], batch.scenarios[i]);
  e.user_specific_raw = emb::lookup(tape, user_specific_.base(), keyed);
  for (std::size_t i = 0; i < n; ++i) keyed[i] = item_specific_.index(batch.items[i], batch.scenarios[i]);
  e.item_specific_raw = emb::lookup(tape, item_specific_.base(), keyed);

  if (batch.slots != side_shared_.size()) {
    throw CompatibilityError("batch has " + std::to_string(batch.slots) + " side-feature slots, model expects " +
                             std::to_string(side_shared_.size()));
  }
  std::vector<Var> shared_parts;
  std::vector<Var> specific_parts;
  std::vector<std::size_t> ids(n);
  for (std::size_t k = 0; k < batch.slots; ++k) {
    for (std::size_t i = 0; i < n; ++i) ids[i] = batch.side[i * batch.slots + k];
    shared_parts.push_back(emb::lookup(tape, side_shared_[k], ids));
    for (std::size_t i = 0; i < n; ++i) ids[i] = side_specific_[k].index(ids[i], batch.scenarios[i]);
    specific_parts.push_back(emb::lookup(tape, side_specific_[k].base(), ids));
  }
  e.side = num::concat(shared_parts);
  e.side_specific = num::concat(specific_parts);
  (void)M;

  std::vector<std::size_t> behavior_ids;
  std::vector<std::size_t> offsets;
  batch.flatten_behaviors(behavior_ids, offsets);
  e.seq = prior::aggregate_sequence(emb::lookup(tape, item_shared_, behavior_ids), offsets);
  return e;
}

ForwardResult GsvrModel::run(num::Tape& tape, const data::Batch& batch, const Noise* noise, bool with_loss) const {
  if (batch.size() == 0) throw ContractError("forward: empty batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  const Embedded e = embed(tape, batch);
  ForwardResult out;

  const bool experts = cfg_.variant != Variant::RMoE;
  out.behavior_mode = experts ? prior::behavior_mode(tape, behavior_net_, e.seq, e.scenario) : e.seq;

  HeadInputs in{e.user, e.user_specific_raw, e.item, e.item_specific_raw, out.behavior_mode, e.side, e.side_specific,
                e.scenario, 1};

  if (cfg_.variant != Variant::Distinct) {
    out.user_posterior = enc::encode(tape, user_encoder_, e.user_specific_raw);
    out.item_posterior = enc::encode(tape, item_encoder_, e.item_specific_raw);
    if (noise) {
      const Eigen::Index L = samples_per_instance();
      if (noise->user.rows() != n * L || noise->item.rows() != n * L) {
        throw DimensionError("noise must have n*L = " + std::to_string(n * L) + " rows");
      }
      auto sample = [&](const enc::DiagGaussian& q, const Tensor2& eps) {
        enc::DiagGaussian tiled{L > 1 ? num::repeat_rows(q.mean, L) : q.mean,
                                L > 1 ? num::repeat_rows(q.std, L) : q.std};
        return enc::reparam_sample(tiled, tape.constant(eps));
      };
      in.user_specific = sample(out.user_posterior, noise->user);
      in.item_specific = sample(out.item_posterior, noise->item);
      in.samples = L;
    } else {
      in.user_specific = out.user_posterior.mean;
      in.item_specific = out.item_posterior.mean;
    }
  }

  out.predictions = backbone_->predict(tape, in);
  out.samples = in.samples;
  if (!with_loss) return out;

  // Prediction loss: mean over instances of the mean over samples.
  Tensor2 labels(n * in.samples, 1);
  for (Eigen::Index i = 0; i < labels.rows(); ++i) labels(i, 0) = batch.labels(i / in.samples, 0);
  Var pred_loss = num::mean(num::binary_cross_entropy(out.predictions, labels));
  out.loss.pred_loss = pred_loss.scalar();

  Var kl_total;
  auto accumulate = [&](Var per_row, double& field) {
    Var m = num::mean(per_row);
    field = m.scalar();
    kl_total = kl_total.valid() ? num::add(kl_total, m) : m;
  };
  switch (cfg_.variant) {
    case Variant::Distinct:
      break;
    case Variant::Uniform:
      accumulate(enc::kl_to_standard(out.user_posterior), out.loss.kl_user_post);
      accumulate(enc::kl_to_standard(out.item_posterior), out.loss.kl_item_post);
      break;
    case Variant::Full:
    case Variant::RMoE:
      out.user_prior = prior::user_prior(tape, behavior_net_, out.behavior_mode);
      out.item_prior = prior::item_prior(tape, side_prior_, e.side_specific, e.side);
      accumulate(enc::kl_diag(out.user_posterior, out.user_prior), out.loss.kl_user_post);
      accumulate(enc::kl_diag(out.item_posterior, out.item_prior), out.loss.kl_item_post);
      accumulate(enc::kl_to_standard(out.user_prior), out.loss.kl_user_anchor);
      accumulate(enc::kl_to_standard(out.item_prior), out.loss.kl_item_anchor);
      break;
  }
  out.total = kl_total.valid() ? num::add(pred_loss, num::scale(kl_total, cfg_.alpha)) : pred_loss;
  out.loss.total = out.total.scalar();
  return out;
}

ForwardResult GsvrModel::forward_train(num::Tape& tape, const data::Batch& batch, const Noise& noise) const {
  return run(tape, batch, cfg_.samples() ? &noise : nullptr, true);
}

ForwardResult GsvrModel::forward_train(num::Tape& tape, const data::Batch& batch, num::Rng& rng) const {
  const Noise noise = draw_noise(batch.size(), rng);
  return forward_train(tape, batch, noise);
}

Tensor2 GsvrModel::forward_infer(const data::Batch& batch) const {
  num::Tape tape;
  return run(tape, batch, nullptr, false).predictions.value();
}

Noise GsvrModel::draw_noise(std::size_t batch_size, num::Rng& rng) const {
  Noise noise = zero_noise(batch_size);
  for (Eigen::Index i = 0; i < noise.user.size(); ++i) noise.user.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < noise.item.size(); ++i) noise.item.data()[i] = rng.normal();
  return noise;
}

Noise GsvrModel::zero_noise(std::size_t batch_size) const {
  if (!cfg_.samples()) return {};
  const Eigen::Index rows = static_cast<Eigen::Index>(batch_size) * samples_per_instance();
  const auto d = static_cast<Eigen::Index>(cfg_.latent_dim);
  return {Tensor2::Zero(rows, d), Tensor2::Zero(rows, d)};
}

std::vector<double> score_dataset(const GsvrModel& model, const data::Dataset& ds, std::size_t batch_size) {
  std::vector<double> scores;
  scores.reserve(ds.size());
  data::BatchStream stream(ds, batch_size);
  data::Batch batch;
  while (stream.next(batch)) {
    const Tensor2 p = model.forward_infer(batch);
    for (Eigen::Index i = 0; i < p.rows(); ++i) scores.push_back(p(i, 0));
  }
  return scores;
}

}  // namespace gsvr::model
