#include "gsvr/model/backbone.hpp"

#include "gsvr/errors.hpp"
#include "gsvr/numerics/ops.hpp"

#include <numeric>

namespace gsvr::model {

MlpBackbone::MlpBackbone(std::array<std::size_t, 8> input_widths, const std::vector<std::size_t>& hidden,
                         num::Rng& rng)
    : widths_(input_widths) {
  std::vector<std::size_t> widths;
  widths.push_back(std::accumulate(input_widths.begin(), input_widths.end(), std::size_t{0}));
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  mlp_ = nn::make_mlp("head", widths, rng);
}

Var MlpBackbone::predict(num::Tape& tape, const HeadInputs& in) const {
  const auto inputs = in.ordered();
  const Eigen::Index n = in.user.rows();
  const Eigen::Index samples = in.samples;

  const nn::Dense& first = mlp_.layers.front();
  Var w1 = emb::parameter(tape, first.weight);

  // Blocks with n rows are summed before the per-sample expansion.
  Var shared;
  Var per_sample;
  Eigen::Index offset = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Var x = inputs[k];
    const auto width = static_cast<Eigen::Index>(widths_[k]);
    if (x.cols() != width) {
      throw DimensionError("backbone input " + std::to_string(k) + " has width " + std::to_string(x.cols()) +
                           ", expected " + std::to_string(width));
    }
    Var part = num::matmul(x, num::slice_rows(w1, offset, width));
    offset += width;
    if (x.rows() == n) {
      shared = shared.valid() ? num::add(shared, part) : part;
    } else if (x.rows() == n * samples) {
      per_sample = per_sample.valid() ? num::add(per_sample, part) : part;
    } else {
      throw DimensionError("backbone input " + std::to_string(k) + " has " + std::to_string(x.rows()) +
                           " rows, expected " + std::to_string(n) + " or " + std::to_string(n * samples));
    }
  }
  // Bias is added before expansion, on n rows.
  Var x = num::add_row(shared, emb::parameter(tape, first.bias));
  if (per_sample.valid()) {
    x = samples > 1 ? num::expand_add(x, per_sample, samples) : num::add(x, per_sample);
  } else if (samples > 1) {
    x = num::repeat_rows(x, samples);
  }
  x = num::relu(x);
  for (std::size_t i = 1; i < mlp_.layers.size(); ++i) {
    const nn::Dense& layer = mlp_.layers[i];
    Var w = emb::parameter(tape, layer.weight);
    Var b = emb::parameter(tape, layer.bias);
    x = i + 1 < mlp_.layers.size() ? num::linear_relu(x, w, b) : num::linear(x, w, b);
  }
  return num::sigmoid(x);
}

void MlpBackbone::collect(std::vector<emb::ParamTable*>& out) { nn::collect(mlp_, out); }

}  // namespace gsvr::model
