#include "helpers.hpp"

#include "gsvr/embeddings/adam.hpp"
#include "gsvr/embeddings/checkpoint.hpp"
#include "gsvr/embeddings/table.hpp"
#include "gsvr/errors.hpp"
#include "gsvr/numerics/ops.hpp"

#include <cmath>
#include <sstream>

using namespace gsvr;
using emb::ParamTable;

TEST_CASE("xavier bounds and determinism") {
  num::Rng rng(1);
  const ParamTable t = emb::xavier_init("t", 500, 40, rng);
  const double bound = std::sqrt(6.0 / 80.0);
  CHECK(std::abs(emb::xavier_bound(40, 40) - 0.27386127875258304) <= 1e-15);
  CHECK(t.weights.cwiseAbs().maxCoeff() <= bound);
  CHECK(t.adam_m.isZero(0.0));
  CHECK(t.adam_v.isZero(0.0));
  CHECK(t.step_counts == std::vector<std::uint64_t>(500, 0));

  num::Rng r1(77), r2(77);
  CHECK(emb::identical(emb::xavier_init("a", 30, 7, r1), emb::xavier_init("a", 30, 7, r2)));
}

TEST_CASE("xavier sample mean within three standard errors of zero") {
  num::Rng rng(12);
  const ParamTable t = emb::xavier_init("big", 25000, 40, rng);
  const double n = static_cast<double>(t.weights.size());
  const double bound = emb::xavier_bound(40, 40);
  const double se = bound / std::sqrt(3.0) / std::sqrt(n);
  CHECK(std::abs(t.weights.mean()) <= 3.0 * se);
}

TEST_CASE("lookup gathers rows and routes gradients") {
  num::Rng rng(3);
  ParamTable t = emb::xavier_init("users", 6, 3, rng);
  const std::size_t ids[] = {4, 1};
  num::Tape tape;
  Var x = emb::lookup(tape, t, ids);
  CHECK(x.value().row(0) == t.weights.row(4));
  CHECK(x.value().row(1) == t.weights.row(1));
  const num::Gradients g = tape.backward(num::sum(x));
  const Tensor2 dense = g.dense(t.weights);
  for (int r = 0; r < 6; ++r) {
    const double expect = (r == 4 || r == 1) ? 1.0 : 0.0;
    CHECK(dense.row(r) == Tensor2::Constant(1, 3, expect));
  }
  CHECK(g.find(t.weights)->rows == std::vector<std::size_t>{1, 4});
}

TEST_CASE("duplicate ids accumulate gradient") {
  num::Rng rng(4);
  ParamTable t = emb::xavier_init("items", 5, 2, rng);
  const std::size_t ids[] = {2, 0, 2, 2};
  const Tensor2 w = test::random_tensor(rng, 4, 2);
  auto build = [&](num::Tape& tape) { return num::sum(num::square(num::mul(emb::lookup(tape, t, ids), tape.constant(w)))); };
  num::Tape tape;
  const Tensor2 grad = tape.backward(build(tape)).dense(t.weights);
  const std::size_t rows[] = {0, 2};
  const Tensor2 fd = num::finite_diff_rows([&] {
    num::Tape tp;
    return build(tp).scalar();
  }, t.weights, rows);
  for (Eigen::Index k = 0; k < grad.size(); ++k) CHECK(num::gradients_agree(grad.data()[k], fd.data()[k]));
  CHECK(grad.row(1).isZero(0.0));

  num::Tape ones;
  CHECK(ones.backward(num::sum(emb::lookup(ones, t, ids))).dense(t.weights)(2, 0) == 3.0);
}

TEST_CASE("lookup edge cases") {
  num::Rng rng(5);
  ParamTable t = emb::xavier_init("side", 4, 6, rng);
  num::Tape tape;
  Var empty = emb::lookup(tape, t, std::span<const std::size_t>{});
  CHECK(empty.rows() == 0);
  CHECK(empty.cols() == 6);
  const std::size_t bad[] = {4};
  try {
    emb::lookup(tape, t, bad);
    FAIL("expected VocabularyError");
  } catch (const VocabularyError& e) {
    CHECK(std::string(e.what()).find("side") != std::string::npos);
  }
}

TEST_CASE("scenario-keyed composite index") {
  num::Rng rng(6);
  emb::ScenarioKeyedTable k = emb::xavier_init_keyed("user_s", 10, 4, 3, rng);
  CHECK(k.base().vocab_size() == 40);
  CHECK(k.index(0, 0) == 0);
  CHECK(k.index(7, 2) == 30);
  CHECK(k.index(9, 3) == 39);
  CHECK_THROWS_AS(k.index(10, 0), VocabularyError);
  CHECK_THROWS_AS(k.index(0, 4), VocabularyError);
}

// Independent scalar Adam with bias correction.
struct ScalarAdam {
  double m = 0, v = 0, w = 0;
  int t = 0;
  void step(double g, double lr, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    w -= lr * mh / (std::sqrt(vh) + eps);
  }
};

num::RowGradient row_grad(std::size_t row, double g) { return {{row}, Tensor2::Constant(1, 1, g)}; }

TEST_CASE("adam single step") {
  ParamTable t = emb::zeros("w", 2, 1);
  const emb::AdamHyper h;
  emb::adam_step(t, row_grad(0, 1.0), h, h.lr);
  CHECK(std::abs(t.weights(0, 0) - (-0.001 / (1.0 + 1e-8))) <= 1e-18);
  CHECK(t.weights(1, 0) == 0.0);
  CHECK(t.step_counts == std::vector<std::uint64_t>{1, 0});

  ParamTable z = emb::zeros("w", 1, 1);
  z.weights(0, 0) = 0.3;
  emb::adam_step(z, row_grad(0, 0.0), h, h.lr);
  CHECK(z.weights(0, 0) == 0.3);
}

TEST_CASE("adam follows a scalar reference trace with per-row step counts") {
  ParamTable t = emb::zeros("w", 2, 1);
  const emb::AdamHyper h;
  ScalarAdam a, b;
  const double grads[] = {1.0, 1.0, -0.5, 2.0, 0.25, 0.0, -3.0};
  for (int i = 0; i < 7; ++i) {
    const double lr = emb::learning_rate(h, static_cast<std::size_t>(i / 3));
    emb::adam_step(t, row_grad(0, grads[i]), h, lr);
    a.step(grads[i], lr);
    if (i % 2 == 0) {
      emb::adam_step(t, row_grad(1, -grads[i]), h, lr);
      b.step(-grads[i], lr);
    }
    CHECK(t.weights(0, 0) == doctest::Approx(a.w).epsilon(1e-14));
    CHECK(t.weights(1, 0) == doctest::Approx(b.w).epsilon(1e-14));
  }
  CHECK(t.step_counts == std::vector<std::uint64_t>{7, 4});
  CHECK((t.adam_v.array() >= 0.0).all());

  // a second identical step moves by the same amount up to the eps term
  ParamTable u = emb::zeros("w", 1, 1);
  emb::adam_step(u, row_grad(0, 1.0), h, h.lr);
  const double first = u.weights(0, 0);
  emb::adam_step(u, row_grad(0, 1.0), h, h.lr);
  CHECK(std::abs((u.weights(0, 0) - first) - first) <= 1e-15);
}

TEST_CASE("adam is deterministic") {
  num::Rng r1(8), r2(8);
  ParamTable a = emb::xavier_init("t", 5, 3, r1), b = emb::xavier_init("t", 5, 3, r2);
  num::RowGradient g{{0, 3}, test::random_tensor(r1, 2, 3)};
  emb::adam_step(a, g, {}, 0.01);
  emb::adam_step(b, g, {}, 0.01);
  CHECK(emb::identical(a, b));
}

TEST_CASE("learning-rate schedule decays per epoch") {
  const emb::AdamHyper h;
  CHECK(emb::learning_rate(h, 0) == 0.001);
  CHECK(std::abs(emb::learning_rate(h, 2) - 0.001 * 0.81) <= 1e-18);
  CHECK(std::abs(emb::learning_rate(h, 5) - 0.001 * std::pow(0.9, 5)) <= 1e-18);
  emb::AdamHyper bad;
  bad.lr = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("checkpoint round trip is bit exact") {
  num::Rng rng(10);
  ParamTable a = emb::xavier_init("user", 7, 4, rng);
  ParamTable b = emb::xavier_init("moe.gate_shared.w", 3, 2, rng);
  emb::adam_step(a, {{1, 5}, test::random_tensor(rng, 2, 4)}, {}, 0.01);
  std::stringstream buf;
  emb::write_checkpoint(buf, {&a, &b});
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 4) == "GSVR");

  const auto back = emb::read_checkpoint(buf);
  REQUIRE(back.size() == 2);
  CHECK(emb::identical(back[0], a));
  CHECK(emb::identical(back[1], b));
  std::stringstream again;
  emb::write_checkpoint(again, {&back[0], &back[1]});
  CHECK(again.str() == bytes);

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(emb::read_checkpoint(truncated), IoError);
  std::stringstream wrong("XXXX" + bytes.substr(4));
  CHECK_THROWS_AS(emb::read_checkpoint(wrong), IoError);
  CHECK_THROWS_AS(emb::load_checkpoint("/nonexistent/model.ckpt"), IoError);
}

TEST_CASE("rows never looked up keep their initialization through training steps") {
  num::Rng rng(13);
  ParamTable t = emb::xavier_init("items", 10, 3, rng);
  const ParamTable init = t;
  const std::size_t ids[] = {2, 5, 5};
  for (int step = 0; step < 20; ++step) {
    num::Tape tape;
    Var x = emb::lookup(tape, t, ids);
    const num::Gradients g = tape.backward(num::sum(num::square(x)));
    emb::adam_step(t, *g.find(t.weights), {}, 0.01);
  }
  for (int r = 0; r < 10; ++r) {
    if (r == 2 || r == 5) {
      CHECK(t.weights.row(r) != init.weights.row(r));
    } else {
      CHECK(t.weights.row(r) == init.weights.row(r));
      CHECK(t.step_counts[static_cast<std::size_t>(r)] == 0);
    }
  }
}
