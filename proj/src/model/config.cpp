#include "gsvr/model/config.hpp"

#include "gsvr/errors.hpp"

namespace gsvr::model {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::Distinct: return "distinct";
    case Variant::Uniform: return "uniform";
    case Variant::RMoE: return "rmoe";
  }
  return "full";
}

Variant parse_variant(const std::string& name) {
  if (name == "full") return Variant::Full;
  if (name == "distinct") return Variant::Distinct;
  if (name == "uniform") return Variant::Uniform;
  if (name == "rmoe") return Variant::RMoE;
  throw ConfigError("unknown variant '" + name + "' (expected full, distinct, uniform or rmoe)");
}

void GsvrConfig::validate() const {
  if (embed_dim == 0 || latent_dim == 0) throw ConfigError("embed_dim and latent_dim must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0, 1)");
  if (mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
  if (encoder_hidden == 0 || prior_hidden == 0) throw ConfigError("hidden widths must be >= 1");
  for (auto h : mlp_hidden) {
    if (h == 0) throw ConfigError("mlp_hidden widths must be >= 1");
  }
  moe.validate();
}

}  // namespace gsvr::model
