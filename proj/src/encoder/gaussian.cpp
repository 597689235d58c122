#include "gsvr/encoder/gaussian.hpp"

#include "gsvr/errors.hpp"
#include "gsvr/numerics/ops.hpp"

namespace gsvr::enc {

GaussianHeads make_gaussian_heads(const std::string& name, std::size_t in_dim, std::size_t hidden,
                                  std::size_t latent_dim, num::Rng& rng) {
  return GaussianHeads{nn::make_mlp(name + ".mean", {in_dim, hidden, latent_dim}, rng),
                       nn::make_mlp(name + ".logvar", {in_dim, hidden, latent_dim}, rng)};
}

void collect(GaussianHeads& heads, std::vector<emb::ParamTable*>& out) {
  nn::collect(heads.mean_head, out);
  nn::collect(heads.logvar_head, out);
}

void zero_out(GaussianHeads& heads) {
  nn::zero_out(heads.mean_head);
  nn::zero_out(heads.logvar_head);
}

DiagGaussian encode(num::Tape& tape, const GaussianHeads& net, Var e) {
  Var mean = nn::forward(tape, net.mean_head, e);
  Var logvar = num::clip(nn::forward(tape, net.logvar_head, e), -kLogVarClip, kLogVarClip);
  return {mean, num::exp(num::scale(logvar, 0.5))};
}

Var reparam_sample(const DiagGaussian& g, Var eps) {
  if (eps.rows() != g.mean.rows() || eps.cols() != g.mean.cols()) {
    throw DimensionError("reparam_sample: eps " + num::shape_string(eps.value()) + " vs mean " +
                         num::shape_string(g.mean.value()));
  }
  return num::add(g.mean, num::mul(g.std, eps));
}

Var kl_diag(const DiagGaussian& q, const DiagGaussian& p) {
  using namespace num;
  if (q.mean.rows() != p.mean.rows() || q.mean.cols() != p.mean.cols()) {
    throw DimensionError("kl_diag: q " + shape_string(q.mean.value()) + " vs p " + shape_string(p.mean.value()));
  }
  // log(σp/σq) + (σq² + (μq−μp)²) / (2σp²) − ½
  Var log_ratio = sub(log(p.std), log(q.std));
  Var numer = add(square(q.std), square(sub(q.mean, p.mean)));
  Var quad = div(numer, scale(square(p.std), 2.0));
  return row_sum(add_scalar(add(log_ratio, quad), -0.5));
}

Var kl_to_standard(const DiagGaussian& q) {
  using namespace num;
  Var var = square(q.std);
  Var terms = sub(add(square(q.mean), var), add_scalar(log(var), 1.0));
  return scale(row_sum(terms), 0.5);
}

DiagGaussian standard_normal(num::Tape& tape, Eigen::Index rows, Eigen::Index cols) {
  return {tape.constant(Tensor2::Zero(rows, cols)), tape.constant(Tensor2::Ones(rows, cols))};
}

}  // namespace gsvr::enc
