#pragma once

#include "gsvr/data/dataset.hpp"
#include "gsvr/embeddings/adam.hpp"
#include "gsvr/model/gsvr.hpp"

#include <cstdint>

namespace gsvr::model {

struct TrainOptions {
  std::size_t batch_size = 512;
  emb::AdamHyper adam;
};

struct EpochStats {
  std::size_t epoch = 0;
  std::size_t instances = 0;
  double learning_rate = 0.0;
  LossBreakdown loss;  // instance-weighted averages
};

// One pass over ds in an order drawn from the data stream for this epoch.
// Throws NumericError naming the first non-finite loss term.
EpochStats train_epoch(GsvrModel& model, const data::Dataset& ds, const TrainOptions& opts, std::size_t epoch,
                       std::uint64_t seed);

// Applies one optimizer step to every table that received a gradient.
void apply_gradients(GsvrModel& model, const num::Gradients& grads, const emb::AdamHyper& hyper, double lr);

}  // namespace gsvr::model
