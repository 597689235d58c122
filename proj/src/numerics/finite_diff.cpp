#include "gsvr/numerics/finite_diff.hpp"

namespace gsvr::num {

namespace {
double central(const std::function<double()>& f, double& coord, double step) {
  const double saved = coord;
  coord = saved + step;
  const double plus = f();
  coord = saved - step;
  const double minus = f();
  coord = saved;
  return (plus - minus) / (2.0 * step);
}
}  // namespace

std::vector<Tensor2> finite_diff(const std::function<double()>& f, std::span<Tensor2* const> params, double step) {
  std::vector<Tensor2> grads;
  grads.reserve(params.size());
  for (Tensor2* p : params) {
    Tensor2 g(p->rows(), p->cols());
    for (Eigen::Index i = 0; i < p->size(); ++i) g.data()[i] = central(f, p->data()[i], step);
    grads.push_back(std::move(g));
  }
  return grads;
}

Tensor2 finite_diff_rows(const std::function<double()>& f, Tensor2& param, std::span<const std::size_t> rows,
                         double step) {
  Tensor2 g = Tensor2::Zero(param.rows(), param.cols());
  for (std::size_t r : rows) {
    const auto row = static_cast<Eigen::Index>(r);
    for (Eigen::Index c = 0; c < param.cols(); ++c) g(row, c) = central(f, param(row, c), step);
  }
  return g;
}

}  // namespace gsvr::num
