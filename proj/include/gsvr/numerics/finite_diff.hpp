#pragma once

#include "gsvr/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace gsvr::num {

// Central-difference gradient of a deterministic scalar function of the
// given parameter matrices: (f(p+h) - f(p-h)) / 2h per coordinate. Each
// parameter is perturbed in place and restored exactly afterwards.
std::vector<Tensor2> finite_diff(const std::function<double()>& f, std::span<Tensor2* const> params,
                                 double step = 1e-5);

// Same, restricted to the listed rows of a single parameter; rows outside the
// list are reported as zero.
Tensor2 finite_diff_rows(const std::function<double()>& f, Tensor2& param, std::span<const std::size_t> rows,
                         double step = 1e-5);

// Tolerance rule used by gradient checks: |a-b| <= max(rel*max(|a|,|b|), abs).
inline bool gradients_agree(double a, double b, double rel = 1e-4, double abs = 1e-7) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) <= std::max(rel * scale, abs);
}

}  // namespace gsvr::num
