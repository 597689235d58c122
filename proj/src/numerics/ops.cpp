#include "gsvr/numerics/ops.hpp"

#include "gsvr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gsvr::num {

namespace {

void require_same_shape(const char* op, Var a, Var b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": operand shapes differ, lhs " + shape_string(a.value()) + " vs rhs " +
                         shape_string(b.value()));
  }
}

Tape& common_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw ContractError("operands recorded on different tapes");
  return a.tape();
}

template <typename F, typename D>
Var unary(Var x, F forward, D derivative) {
  Tensor2 out = x.value().unaryExpr(forward);
  return x.tape().record(std::move(out), {x}, [x, derivative](Tape& t, const Tensor2& g) {
    t.accumulate(x, g.cwiseProduct(x.value().unaryExpr(derivative)));
  });
}

double stable_softplus(double v) {
  if (v > 30.0) return v;
  if (v < -30.0) return std::exp(v);
  return std::log1p(std::exp(v));
}

double logistic(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = common_tape(a, b);
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: lhs " + shape_string(a.value()) + " incompatible with rhs " +
                         shape_string(b.value()));
  }
  Tensor2 out(a.rows(), b.cols());
  out.noalias() = a.value() * b.value();
  return tape.record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor2& g) {
    t.accumulate(a, g * b.value().transpose());
    t.accumulate(b, a.value().transpose() * g);
  });
}

namespace {

Var affine(Var x, Var weight, Var bias, bool rectify) {
  Tape& tape = common_tape(x, weight);
  common_tape(x, bias);
  if (x.cols() != weight.rows()) {
    throw DimensionError("linear: input x " + shape_string(x.value()) + " incompatible with weight W " +
                         shape_string(weight.value()));
  }
  if (bias.rows() != 1 || bias.cols() != weight.cols()) {
    throw DimensionError("linear: bias b " + shape_string(bias.value()) + " incompatible with weight W " +
                         shape_string(weight.value()));
  }
  Tensor2 out(x.rows(), weight.cols());
  out.noalias() = x.value() * weight.value();
  out.rowwise() += bias.value().row(0);
  if (rectify) out = out.cwiseMax(0.0);
  const std::size_t out_id = tape.size();
  return tape.record(std::move(out), {x, weight, bias}, [x, weight, bias, rectify, out_id](Tape& t, const Tensor2& g) {
    Tensor2 masked;
    if (rectify) masked = (t.value(out_id).array() > 0.0).select(g.array(), 0.0).matrix();
    const Tensor2& gz = rectify ? masked : g;
    t.accumulate(x, gz * weight.value().transpose());
    t.accumulate(weight, x.value().transpose() * gz);
    t.accumulate(bias, gz.colwise().sum());
  });
}

}  // namespace

Var linear(Var x, Var weight, Var bias) { return affine(x, weight, bias, false); }

Var linear_relu(Var x, Var weight, Var bias) { return affine(x, weight, bias, true); }

Var expand_add(Var shared, Var per_sample, Eigen::Index times) {
  Tape& tape = common_tape(shared, per_sample);
  if (times < 1) throw DimensionError("expand_add: times must be >= 1");
  if (per_sample.rows() != shared.rows() * times || per_sample.cols() != shared.cols()) {
    throw DimensionError("expand_add: per-sample " + shape_string(per_sample.value()) + " does not match shared " +
                         shape_string(shared.value()) + " repeated " + std::to_string(times) + " times");
  }
  Tensor2 out = per_sample.value();
  const Tensor2& sv = shared.value();
  for (Eigen::Index r = 0; r < sv.rows(); ++r) out.middleRows(r * times, times).rowwise() += sv.row(r);
  return tape.record(std::move(out), {shared, per_sample}, [shared, per_sample, times](Tape& t, const Tensor2& g) {
    t.accumulate(per_sample, g);
    if (!t.requires_grad(shared)) return;
    Tensor2 folded(shared.rows(), shared.cols());
    for (Eigen::Index r = 0; r < folded.rows(); ++r) folded.row(r) = g.middleRows(r * times, times).colwise().sum();
    t.accumulate(shared, folded);
  });
}

Var add(Var a, Var b) {
  Tape& tape = common_tape(a, b);
  require_same_shape("add", a, b);
  return tape.record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Tensor2& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  Tape& tape = common_tape(a, b);
  require_same_shape("sub", a, b);
  return tape.record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Tensor2& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var mul(Var a, Var b) {
  Tape& tape = common_tape(a, b);
  require_same_shape("mul", a, b);
  return tape.record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, const Tensor2& g) {
    t.accumulate(a, g.cwiseProduct(b.value()));
    t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

Var div(Var a, Var b) {
  Tape& tape = common_tape(a, b);
  require_same_shape("div", a, b);
  if ((b.value().array() == 0.0).any()) throw DomainError("div: zero divisor");
  return tape.record(a.value().cwiseQuotient(b.value()), {a, b}, [a, b](Tape& t, const Tensor2& g) {
    t.accumulate(a, g.cwiseQuotient(b.value()));
    t.accumulate(b, (-g.array() * a.value().array() / b.value().array().square()).matrix());
  });
}

Var add_row(Var x, Var row) {
  Tape& tape = common_tape(x, row);
  if (row.rows() != 1 || row.cols() != x.cols()) {
    throw DimensionError("add_row: row " + shape_string(row.value()) + " does not broadcast over x " +
                         shape_string(x.value()));
  }
  Tensor2 out = x.value();
  out.rowwise() += row.value().row(0);
  return tape.record(std::move(out), {x, row}, [x, row](Tape& t, const Tensor2& g) {
    t.accumulate(x, g);
    t.accumulate(row, g.colwise().sum());
  });
}

Var mul_col(Var x, Var c) {
  Tape& tape = common_tape(x, c);
  if (c.cols() != 1 || c.rows() != x.rows()) {
    throw DimensionError("mul_col: column " + shape_string(c.value()) + " does not broadcast over x " +
                         shape_string(x.value()));
  }
  Tensor2 out = x.value().array().colwise() * c.value().col(0).array();
  return tape.record(std::move(out), {x, c}, [x, c](Tape& t, const Tensor2& g) {
    t.accumulate(x, (g.array().colwise() * c.value().col(0).array()).matrix());
    t.accumulate(c, g.cwiseProduct(x.value()).rowwise().sum());
  });
}

Var scale(Var x, double factor) {
  return x.tape().record(x.value() * factor, {x}, [x, factor](Tape& t, const Tensor2& g) {
    t.accumulate(x, g * factor);
  });
}

Var add_scalar(Var x, double value) {
  Tensor2 out = x.value().array() + value;
  return x.tape().record(std::move(out), {x}, [x](Tape& t, const Tensor2& g) {
    t.accumulate(x, g);
  });
}

Var relu(Var x) {
  return x.tape().record(x.value().cwiseMax(0.0), {x}, [x](Tape& t, const Tensor2& g) {
    t.accumulate(x, (x.value().array() > 0.0).select(g.array(), 0.0).matrix());
  });
}

Var sigmoid(Var x) {
  Tensor2 out = x.value().unaryExpr(&logistic);
  Tape& tape = x.tape();
  const std::size_t out_id = tape.size();
  return tape.record(std::move(out), {x}, [x, out_id](Tape& t, const Tensor2& g) {
    const Tensor2& y = t.value(out_id);
    t.accumulate(x, (g.array() * y.array() * (1.0 - y.array())).matrix());
  });
}

Var exp(Var x) {
  Tensor2 out = x.value().array().exp();
  Tape& tape = x.tape();
  const std::size_t out_id = tape.size();
  return tape.record(std::move(out), {x}, [x, out_id](Tape& t, const Tensor2& g) {
    t.accumulate(x, g.cwiseProduct(t.value(out_id)));
  });
}

Var log(Var x) {
  if ((x.value().array() <= 0.0).any()) throw DomainError("log: input must be strictly positive");
  return x.tape().record(x.value().array().log().matrix(), {x}, [x](Tape& t, const Tensor2& g) {
    t.accumulate(x, g.cwiseQuotient(x.value()));
  });
}

Var softplus(Var x) {
  return unary(x, &stable_softplus, &logistic);
}

Var square(Var x) {
  return x.tape().record(x.value().array().square().matrix(), {x}, [x](Tape& t, const Tensor2& g) {
    t.accumulate(x, 2.0 * g.cwiseProduct(x.value()));
  });
}

Var clip(Var x, double lo, double hi) {
  return x.tape().record(x.value().cwiseMax(lo).cwiseMin(hi), {x}, [x, lo, hi](Tape& t, const Tensor2& g) {
    const auto& v = x.value().array();
    t.accumulate(x, ((v >= lo) && (v <= hi)).select(g.array(), 0.0).matrix());
  });
}

Var softmax(Var x) {
  if (x.cols() < 1) throw DimensionError("softmax: input " + shape_string(x.value()) + " has no columns");
  Tensor2 out = x.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
  Tape& tape = x.tape();
  const std::size_t out_id = tape.size();
  return tape.record(std::move(out), {x}, [x, out_id](Tape& t, const Tensor2& g) {
    if (!t.requires_grad(x)) return;
    const Tensor2& y = t.value(out_id);
    const Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
    t.accumulate(x, (y.array() * (g.array().colwise() - dot.array())).matrix());
  });
}

Var concat(std::initializer_list<Var> xs) { return concat(std::span<const Var>(xs.begin(), xs.size())); }

Var concat(std::span<const Var> xs) {
  if (xs.empty()) throw DimensionError("concat: no operands");
  Tape& tape = xs.front().tape();
  const Eigen::Index rows = xs.front().rows();
  Eigen::Index cols = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].rows() != rows) {
      throw DimensionError("concat: operand " + std::to_string(i) + " " + shape_string(xs[i].value()) +
                           " has a different row count than operand 0 " + shape_string(xs.front().value()));
    }
    cols += xs[i].cols();
  }
  Tensor2 out(rows, cols);
  Eigen::Index offset = 0;
  for (const Var& x : xs) {
    out.middleCols(offset, x.cols()) = x.value();
    offset += x.cols();
  }
  std::vector<Var> inputs(xs.begin(), xs.end());
  return tape.record(std::move(out), xs, [inputs](Tape& t, const Tensor2& g) {
    Eigen::Index off = 0;
    for (const Var& x : inputs) {
      t.accumulate(x, g.middleCols(off, x.cols()));
      off += x.cols();
    }
  });
}

Var slice_cols(Var x, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > x.cols()) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") outside x " + shape_string(x.value()));
  }
  Tensor2 out = x.value().middleCols(begin, count);
  return x.tape().record(std::move(out), {x}, [x, begin, count](Tape& t, const Tensor2& g) {
    if (Tensor2* gx = t.grad_slot(x)) gx->middleCols(begin, count) += g;
  });
}

Var slice_rows(Var x, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > x.rows()) {
    throw DimensionError("slice_rows: range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") outside x " + shape_string(x.value()));
  }
  Tensor2 out = x.value().middleRows(begin, count);
  return x.tape().record(std::move(out), {x}, [x, begin, count](Tape& t, const Tensor2& g) {
    if (Tensor2* gx = t.grad_slot(x)) gx->middleRows(begin, count) += g;
  });
}

Var repeat_rows(Var x, Eigen::Index times) {
  if (times < 1) throw DimensionError("repeat_rows: times must be >= 1");
  const Tensor2& v = x.value();
  Tensor2 out(v.rows() * times, v.cols());
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    for (Eigen::Index k = 0; k < times; ++k) out.row(r * times + k) = v.row(r);
  }
  return x.tape().record(std::move(out), {x}, [x, times](Tape& t, const Tensor2& g) {
    if (Tensor2* gx = t.grad_slot(x)) {
      for (Eigen::Index r = 0; r < gx->rows(); ++r) {
        for (Eigen::Index k = 0; k < times; ++k) gx->row(r) += g.row(r * times + k);
      }
    }
  });
}

Var segment_mean(Var x, std::span<const std::size_t> offsets) {
  if (offsets.empty() || offsets.back() != static_cast<std::size_t>(x.rows())) {
    throw DimensionError("segment_mean: offsets do not cover x " + shape_string(x.value()));
  }
  const auto segments = static_cast<Eigen::Index>(offsets.size() - 1);
  Tensor2 out = Tensor2::Zero(segments, x.cols());
  for (Eigen::Index s = 0; s < segments; ++s) {
    const auto begin = static_cast<Eigen::Index>(offsets[s]);
    const auto end = static_cast<Eigen::Index>(offsets[s + 1]);
    if (end < begin) throw DimensionError("segment_mean: offsets must be nondecreasing");
    if (end > begin) out.row(s) = x.value().middleRows(begin, end - begin).colwise().mean();
  }
  std::vector<std::size_t> offs(offsets.begin(), offsets.end());
  return x.tape().record(std::move(out), {x}, [x, offs](Tape& t, const Tensor2& g) {
    if (Tensor2* gx = t.grad_slot(x)) {
      for (std::size_t s = 0; s + 1 < offs.size(); ++s) {
        const std::size_t n = offs[s + 1] - offs[s];
        if (n == 0) continue;
        const double w = 1.0 / static_cast<double>(n);
        for (std::size_t r = offs[s]; r < offs[s + 1]; ++r) {
          gx->row(static_cast<Eigen::Index>(r)) += w * g.row(static_cast<Eigen::Index>(s));
        }
      }
    }
  });
}

Var sum(Var x) {
  Tensor2 out(1, 1);
  out(0, 0) = x.value().sum();
  return x.tape().record(std::move(out), {x}, [x](Tape& t, const Tensor2& g) {
    if (Tensor2* gx = t.grad_slot(x)) gx->array() += g(0, 0);
  });
}

Var mean(Var x) {
  const auto n = static_cast<double>(x.value().size());
  if (n == 0) throw DimensionError("mean: empty input");
  return scale(sum(x), 1.0 / n);
}

Var row_sum(Var x) {
  Tensor2 out = x.value().rowwise().sum();
  return x.tape().record(std::move(out), {x}, [x](Tape& t, const Tensor2& g) {
    t.accumulate(x, g.col(0).replicate(1, x.cols()));
  });
}

Var binary_cross_entropy(Var prob, const Tensor2& labels) {
  if (prob.rows() != labels.rows() || prob.cols() != labels.cols()) {
    throw DimensionError("binary_cross_entropy: prob " + shape_string(prob.value()) + " vs labels " +
                         shape_string(labels));
  }
  const Tensor2& p = prob.value();
  Tensor2 out(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p.data()[i], kProbClip, 1.0 - kProbClip);
    const double y = labels.data()[i];
    out.data()[i] = -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
  }
  return prob.tape().record(std::move(out), {prob}, [prob, labels](Tape& t, const Tensor2& g) {
    if (Tensor2* gp = t.grad_slot(prob)) {
      const Tensor2& pv = prob.value();
      for (Eigen::Index i = 0; i < pv.size(); ++i) {
        const double q = pv.data()[i];
        if (q < kProbClip || q > 1.0 - kProbClip) continue;
        const double y = labels.data()[i];
        gp->data()[i] += g.data()[i] * (-(y / q) + (1.0 - y) / (1.0 - q));
      }
    }
  });
}

}  // namespace gsvr::num
