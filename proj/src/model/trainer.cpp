#include "gsvr/model/trainer.hpp"

#include "gsvr/errors.hpp"

namespace gsvr::model {

void apply_gradients(GsvrModel& model, const num::Gradients& grads, const emb::AdamHyper& hyper, double lr) {
  for (emb::ParamTable* t : model.parameters()) {
    if (const num::RowGradient* g = grads.find(t->weights)) emb::adam_step(*t, *g, hyper, lr);
  }
}

EpochStats train_epoch(GsvrModel& model, const data::Dataset& ds, const TrainOptions& opts, std::size_t epoch,
                       std::uint64_t seed) {
  if (ds.empty()) throw ContractError("train_epoch: empty dataset");
  opts.adam.validate();
  num::Rng shuffle = num::Rng::stream(seed, num::Stream::Data, 1 + epoch);
  num::Rng noise = num::Rng::stream(seed, num::Stream::McNoise, epoch);
  data::BatchStream stream(ds, opts.batch_size, &shuffle);

  EpochStats stats;
  stats.epoch = epoch;
  stats.learning_rate = emb::learning_rate(opts.adam, epoch);
  data::Batch batch;
  while (stream.next(batch)) {
    num::Tape tape;
    ForwardResult r = model.forward_train(tape, batch, noise);
    const std::string bad = r.loss.first_non_finite();
    if (!bad.empty()) {
      throw NumericError("non-finite " + bad + " at epoch " + std::to_string(epoch) + " after " +
                         std::to_string(stats.instances) + " instances");
    }
    num::Gradients grads = tape.backward(r.total);
    apply_gradients(model, grads, opts.adam, stats.learning_rate);
    stats.loss += r.loss.scaled(static_cast<double>(batch.size()));
    stats.instances += batch.size();
  }
  stats.loss = stats.loss.scaled(1.0 / static_cast<double>(stats.instances));
  return stats;
}

}  // namespace gsvr::model
