#pragma once

#include "gsvr/embeddings/table.hpp"
#include "gsvr/numerics/rng.hpp"
#include "gsvr/numerics/tape.hpp"

#include <span>
#include <string>
#include <vector>

namespace gsvr::nn {

using emb::ParamTable;
using num::Var;

// Affine layer x W + b. W is [in × out], b is [1 × out].
struct Dense {
  ParamTable weight;
  ParamTable bias;

  std::size_t in_dim() const { return weight.vocab_size(); }
  std::size_t out_dim() const { return weight.dim(); }
};

Dense make_dense(const std::string& name, std::size_t in, std::size_t out, num::Rng& rng);
Var forward(num::Tape& tape, const Dense& layer, Var x);

// Stack of Dense layers with relu between them and a linear output.
struct Mlp {
  std::vector<Dense> layers;

  std::size_t in_dim() const { return layers.front().in_dim(); }
  std::size_t out_dim() const { return layers.back().out_dim(); }
};

// widths = {in, hidden..., out}.
Mlp make_mlp(const std::string& name, std::span<const std::size_t> widths, num::Rng& rng);
Mlp make_mlp(const std::string& name, std::initializer_list<std::size_t> widths, num::Rng& rng);
Var forward(num::Tape& tape, const Mlp& mlp, Var x);

void collect(Dense& layer, std::vector<ParamTable*>& out);
void collect(Mlp& mlp, std::vector<ParamTable*>& out);

// Sets every weight and bias of the network to zero (test hook).
void zero_out(Mlp& mlp);

}  // namespace gsvr::nn
