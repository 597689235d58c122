#include "gsvr/embeddings/adam.hpp"

#include "gsvr/errors.hpp"

#include <cmath>

namespace gsvr::emb {

void AdamHyper::validate() const {
  if (!(lr > 0.0)) throw ConfigError("adam: lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("adam: beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam: beta2 must be in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("adam: eps must be > 0");
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("adam: decay must be in (0, 1]");
}

double learning_rate(const AdamHyper& hyper, std::size_t epoch) {
  return hyper.lr * std::pow(hyper.decay, static_cast<double>(epoch));
}

void adam_step(ParamTable& table, const num::RowGradient& grad, const AdamHyper& hyper, double lr) {
  if (grad.values.cols() != table.weights.cols()) {
    throw DimensionError("adam_step: gradient width does not match table '" + table.name + "'");
  }
  const Eigen::Index dim = table.weights.cols();
  for (std::size_t k = 0; k < grad.rows.size(); ++k) {
    const std::size_t r = grad.rows[k];
    if (r >= table.vocab_size()) throw VocabularyError("adam_step: row out of range for table '" + table.name + "'");
    const auto row = static_cast<Eigen::Index>(r);
    const std::uint64_t t = ++table.step_counts[r];
    const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
    double* w = &table.weights(row, 0);
    double* m = &table.adam_m(row, 0);
    double* v = &table.adam_v(row, 0);
    const double* g = &grad.values(static_cast<Eigen::Index>(k), 0);
    for (Eigen::Index c = 0; c < dim; ++c) {
      m[c] = hyper.beta1 * m[c] + (1.0 - hyper.beta1) * g[c];
      v[c] = hyper.beta2 * v[c] + (1.0 - hyper.beta2) * g[c] * g[c];
      const double m_hat = m[c] / c1;
      const double v_hat = v[c] / c2;
      w[c] -= lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
    }
  }
}

}  // namespace gsvr::emb
