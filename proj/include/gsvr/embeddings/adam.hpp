#pragma once

#include "gsvr/embeddings/table.hpp"

#include <cstddef>

namespace gsvr::emb {

struct AdamHyper {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double decay = 0.9;  // multiplicative, once per epoch

  void validate() const;
};

// lr * decay^epoch.
double learning_rate(const AdamHyper& hyper, std::size_t epoch);

// Lazy Adam: only rows present in `grad` move, and bias correction uses each
// row's own step count.
void adam_step(ParamTable& table, const num::RowGradient& grad, const AdamHyper& hyper, double lr);

}  // namespace gsvr::emb
