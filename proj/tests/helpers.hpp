#pragma once

#include "gsvr/numerics/finite_diff.hpp"
#include "gsvr/numerics/rng.hpp"
#include "gsvr/numerics/tape.hpp"

#include <doctest.h>

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace gsvr {
using num::Tensor2;
using num::Var;
}  // namespace gsvr

namespace gsvr::test {

using num::Tape;

inline Tensor2 random_tensor(num::Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo = -1.0, double hi = 1.0) {
  Tensor2 t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(lo, hi);
  return t;
}

using LossBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

// Count of coordinates where the tape gradient and central differences
// disagree under the default gradient tolerance.
inline std::size_t gradient_mismatches(std::vector<Tensor2*> params, const LossBuilder& build) {
  Tape tape;
  std::vector<Var> leaves;
  for (Tensor2* p : params) leaves.push_back(tape.parameter(*p));
  const num::Gradients grads = tape.backward(build(tape, leaves));
  auto f = [&] {
    Tape t;
    std::vector<Var> l;
    for (Tensor2* p : params) l.push_back(t.parameter(*p));
    return build(t, l).scalar();
  };
  const std::vector<Tensor2> fd = num::finite_diff(f, params);
  std::size_t bad = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor2 g = grads.dense(*params[i]);
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      if (!num::gradients_agree(g.data()[k], fd[i].data()[k])) {
        ++bad;
        MESSAGE("param " << i << " coord " << k << ": tape " << g.data()[k] << " fd " << fd[i].data()[k]);
      }
    }
  }
  return bad;
}

// Fresh scratch directory under GSVR_TEST_TMP (or the system temp dir).
inline std::filesystem::path scratch_dir(const std::string& name) {
  const char* root = std::getenv("GSVR_TEST_TMP");
  std::filesystem::path dir = root ? std::filesystem::path(root) : std::filesystem::temp_directory_path() / "gsvr_tests";
  dir /= name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace gsvr::test
