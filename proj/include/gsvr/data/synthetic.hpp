#pragma once

#include "gsvr/data/dataset.hpp"

#include <cstdint>
#include <vector>

namespace gsvr::data {

// Multi-scenario click generator. Ground truth is a global latent vector per
// user and item plus small per-scenario offsets; items are clustered into
// categories (slot 0) and brands (slot 1) in latent space so side features
// carry global structure.
struct SynthConfig {
  std::size_t num_users = 2000;
  std::size_t num_items = 1000;
  std::size_t num_scenarios = 4;
  std::size_t num_impressions = 200000;
  std::size_t latent_dim_true = 8;
  std::vector<double> scenario_skew = {0.7, 0.2, 0.08, 0.02};
  double noise = 1.0;          // logistic noise scale on the click logit
  double offset_scale = 0.5;   // stddev of per-scenario offsets
  double signal_scale = 2.0;   // multiplies <u, v>/sqrt(d)
  double label_bias = -0.5;
  std::size_t seq_len = 10;
  std::size_t session_size = 10;
  std::size_t num_categories = 20;
  std::size_t brands_per_category = 5;
  std::size_t behavior_pool = 50;  // behaviors come from each user's top-affinity items

  void validate() const;
};

struct GroundTruth {
  num::Tensor2 user_global;      // users × d
  num::Tensor2 item_global;      // items × d
  num::Tensor2 user_offsets;     // (users·M) × d, row = user·M + scenario
  num::Tensor2 item_offsets;     // (items·M) × d
  std::vector<std::uint32_t> item_category;
  std::vector<std::uint32_t> item_brand;
};

struct SyntheticData {
  Dataset dataset;
  GroundTruth truth;
};

SyntheticData generate_synthetic(const SynthConfig& cfg, std::uint64_t seed);

// Click logit of the generator before noise.
double true_logit(const SynthConfig& cfg, const GroundTruth& truth, std::size_t user, std::size_t item,
                  std::size_t scenario);

}  // namespace gsvr::data
