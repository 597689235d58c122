#pragma once

#include "gsvr/nn/mlp.hpp"
#include "gsvr/numerics/tape.hpp"

#include <array>
#include <memory>
#include <vector>

namespace gsvr::model {

using num::Var;

// The eight prediction inputs, in order: u, u_s, v, v_s, b_us, c, c_s, s.
// Per-instance inputs have n rows; the sampled inputs (u_s, v_s) have either
// n rows or n·samples rows, instance-major (row i·samples + l).
struct HeadInputs {
  Var user;
  Var user_specific;
  Var item;
  Var item_specific;
  Var behavior_mode;
  Var side;
  Var side_specific;
  Var scenario;
  Eigen::Index samples = 1;

  std::array<Var, 8> ordered() const {
    return {user, user_specific, item, item_specific, behavior_mode, side, side_specific, scenario};
  }
};

// Prediction layer hook: maps the eight inputs to click probabilities with
// n·samples rows. Gate-scaling backbones can be added behind this interface.
class Backbone {
 public:
  virtual ~Backbone() = default;
  virtual Var predict(num::Tape& tape, const HeadInputs& in) const = 0;
  virtual void collect(std::vector<emb::ParamTable*>& out) = 0;
  virtual std::unique_ptr<Backbone> clone() const = 0;
};

// Perceptron over concat(inputs) with relu hidden layers and a sigmoid
// output. The first layer is applied block-wise so per-instance inputs are
// multiplied once rather than once per sample.
class MlpBackbone final : public Backbone {
 public:
  MlpBackbone(std::array<std::size_t, 8> input_widths, const std::vector<std::size_t>& hidden, num::Rng& rng);

  Var predict(num::Tape& tape, const HeadInputs& in) const override;
  void collect(std::vector<emb::ParamTable*>& out) override;
  std::unique_ptr<Backbone> clone() const override { return std::make_unique<MlpBackbone>(*this); }

  const nn::Mlp& mlp() const { return mlp_; }

 private:
  std::array<std::size_t, 8> widths_;
  nn::Mlp mlp_;
};

}  // namespace gsvr::model
