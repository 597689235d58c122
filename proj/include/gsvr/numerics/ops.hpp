#pragma once

#include "gsvr/numerics/tape.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

// Differentiable primitives. Every function records one node on the tape
// owning its inputs. Shape errors throw DimensionError naming the operands.
namespace gsvr::num {

Var matmul(Var a, Var b);
// x W + b with b broadcast over rows.
Var linear(Var x, Var weight, Var bias);
// relu(x W + b) as one node.
Var linear_relu(Var x, Var weight, Var bias);
// Row i*times + l of the result is shared[i] + per_sample[i*times + l].
Var expand_add(Var shared, Var per_sample, Eigen::Index times);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
// x [n×d] + row [1×d] broadcast over rows.
Var add_row(Var x, Var row);
// x [n×d] scaled per row by c [n×1].
Var mul_col(Var x, Var c);
Var scale(Var x, double factor);
Var add_scalar(Var x, double value);

Var relu(Var x);
Var sigmoid(Var x);
Var exp(Var x);
// Throws DomainError on any input <= 0.
Var log(Var x);
Var softplus(Var x);
Var square(Var x);
// Elementwise clamp; gradient is zero where the input was clipped.
Var clip(Var x, double lo, double hi);

// Row-wise softmax with max subtraction.
Var softmax(Var x);

Var concat(std::span<const Var> xs);
Var concat(std::initializer_list<Var> xs);
Var slice_cols(Var x, Eigen::Index begin, Eigen::Index count);
Var slice_rows(Var x, Eigen::Index begin, Eigen::Index count);
// Repeats every row `times` times consecutively: row i goes to rows
// i*times .. i*times+times-1.
Var repeat_rows(Var x, Eigen::Index times);

// Mean of consecutive row segments: output row k averages input rows
// offsets[k] .. offsets[k+1]-1; an empty segment yields a zero row.
Var segment_mean(Var x, std::span<const std::size_t> offsets);

Var sum(Var x);       // 1×1
Var mean(Var x);      // 1×1
Var row_sum(Var x);   // n×1

// Per-element binary cross-entropy of probabilities against {0,1} labels;
// probabilities are clamped to [1e-7, 1-1e-7].
Var binary_cross_entropy(Var prob, const Tensor2& labels);

inline constexpr double kProbClip = 1e-7;

}  // namespace gsvr::num
