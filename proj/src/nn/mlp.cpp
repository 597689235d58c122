#include "gsvr/nn/mlp.hpp"

#include "gsvr/errors.hpp"
#include "gsvr/numerics/ops.hpp"

namespace gsvr::nn {

Dense make_dense(const std::string& name, std::size_t in, std::size_t out, num::Rng& rng) {
  return Dense{emb::xavier_init(name + ".w", in, out, in, out, rng), emb::zeros(name + ".b", 1, out)};
}

Var forward(num::Tape& tape, const Dense& layer, Var x) {
  return num::linear(x, emb::parameter(tape, layer.weight), emb::parameter(tape, layer.bias));
}

Mlp make_mlp(const std::string& name, std::span<const std::size_t> widths, num::Rng& rng) {
  if (widths.size() < 2) throw ConfigError("mlp '" + name + "' needs at least input and output widths");
  Mlp mlp;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    mlp.layers.push_back(make_dense(name + "." + std::to_string(i), widths[i], widths[i + 1], rng));
  }
  return mlp;
}

Mlp make_mlp(const std::string& name, std::initializer_list<std::size_t> widths, num::Rng& rng) {
  return make_mlp(name, std::span<const std::size_t>(widths.begin(), widths.size()), rng);
}

Var forward(num::Tape& tape, const Mlp& mlp, Var x) {
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    const Dense& layer = mlp.layers[i];
    Var w = emb::parameter(tape, layer.weight);
    Var b = emb::parameter(tape, layer.bias);
    x = i + 1 < mlp.layers.size() ? num::linear_relu(x, w, b) : num::linear(x, w, b);
  }
  return x;
}

void collect(Dense& layer, std::vector<ParamTable*>& out) {
  out.push_back(&layer.weight);
  out.push_back(&layer.bias);
}

void collect(Mlp& mlp, std::vector<ParamTable*>& out) {
  for (auto& layer : mlp.layers) collect(layer, out);
}

void zero_out(Mlp& mlp) {
  for (auto& layer : mlp.layers) {
    layer.weight.weights.setZero();
    layer.bias.weights.setZero();
  }
}

}  // namespace gsvr::nn
