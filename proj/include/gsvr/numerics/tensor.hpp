#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <initializer_list>
#include <string>

namespace gsvr::num {

// Dense row-major float64 matrix. Every vector quantity in the model is a
// Tensor2 with one row per instance.
using Tensor2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Tensor2 make_tensor(std::initializer_list<std::initializer_list<double>> rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = n == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.begin()->size());
  Tensor2 t(n, d);
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) t(r, c++) = v;
    ++r;
  }
  return t;
}

inline std::string shape_string(const Tensor2& t) {
  return "[" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + "]";
}

inline bool all_finite(const Tensor2& t) { return t.allFinite(); }

}  // namespace gsvr::num
