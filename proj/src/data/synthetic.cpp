#include "gsvr/data/synthetic.hpp"

#include "gsvr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gsvr::data {

void SynthConfig::validate() const {
  if (num_users == 0 || num_items == 0 || num_scenarios == 0 || num_impressions == 0 || latent_dim_true == 0) {
    throw ConfigError("synth: counts must be >= 1");
  }
  if (scenario_skew.size() != num_scenarios) {
    throw ConfigError("synth: scenario_skew needs " + std::to_string(num_scenarios) + " weights");
  }
  double total = 0.0;
  for (double w : scenario_skew) {
    if (!(w > 0.0)) throw ConfigError("synth: scenario_skew weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("synth: scenario_skew must sum to 1");
  if (noise < 0.0 || offset_scale < 0.0) throw ConfigError("synth: noise and offset_scale must be >= 0");
  if (session_size == 0) throw ConfigError("synth: session_size must be >= 1");
  if (num_categories == 0 || brands_per_category == 0) throw ConfigError("synth: need categories and brands");
  if (behavior_pool == 0) throw ConfigError("synth: behavior_pool must be >= 1");
}

double true_logit(const SynthConfig& cfg, const GroundTruth& truth, std::size_t user, std::size_t item,
                  std::size_t scenario) {
  const auto u = static_cast<Eigen::Index>(user);
  const auto v = static_cast<Eigen::Index>(item);
  const auto us = static_cast<Eigen::Index>(user * cfg.num_scenarios + scenario);
  const auto vs = static_cast<Eigen::Index>(item * cfg.num_scenarios + scenario);
  const double dot = (truth.user_global.row(u) + truth.user_offsets.row(us))
                         .dot(truth.item_global.row(v) + truth.item_offsets.row(vs));
  return cfg.signal_scale * dot / std::sqrt(static_cast<double>(cfg.latent_dim_true)) + cfg.label_bias;
}

SyntheticData generate_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  num::Rng rng = num::Rng::stream(seed, num::Stream::Data);
  const auto d = static_cast<Eigen::Index>(cfg.latent_dim_true);
  const std::size_t M = cfg.num_scenarios;
  auto normal_matrix = [&](std::size_t rows, double sd) {
    num::Tensor2 m(static_cast<Eigen::Index>(rows), d);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = sd * rng.normal();
    return m;
  };

  GroundTruth truth;
  truth.user_global = normal_matrix(cfg.num_users, 1.0);

  // Category centers carry half the item variance, brands a quarter, items the rest.
  const num::Tensor2 category_centers = normal_matrix(cfg.num_categories, std::sqrt(0.5));
  const std::size_t num_brands = cfg.num_categories * cfg.brands_per_category;
  num::Tensor2 brand_centers = normal_matrix(num_brands, 0.5);
  for (std::size_t b = 0; b < num_brands; ++b) {
    brand_centers.row(static_cast<Eigen::Index>(b)) +=
        category_centers.row(static_cast<Eigen::Index>(b / cfg.brands_per_category));
  }
  truth.item_global = normal_matrix(cfg.num_items, 0.5);
  truth.item_brand.resize(cfg.num_items);
  truth.item_category.resize(cfg.num_items);
  for (std::size_t i = 0; i < cfg.num_items; ++i) {
    const auto brand = static_cast<std::uint32_t>(rng.below(num_brands));
    truth.item_brand[i] = brand;
    truth.item_category[i] = static_cast<std::uint32_t>(brand / cfg.brands_per_category);
    truth.item_global.row(static_cast<Eigen::Index>(i)) += brand_centers.row(brand);
  }

  // Scenario offsets: users individually; items through their category plus
  // a smaller individual part.
  truth.user_offsets = normal_matrix(cfg.num_users * M, cfg.offset_scale);
  const num::Tensor2 category_offsets = normal_matrix(cfg.num_categories * M, cfg.offset_scale * std::sqrt(0.75));
  truth.item_offsets = normal_matrix(cfg.num_items * M, cfg.offset_scale * 0.5);
  for (std::size_t i = 0; i < cfg.num_items; ++i) {
    for (std::size_t s = 0; s < M; ++s) {
      truth.item_offsets.row(static_cast<Eigen::Index>(i * M + s)) +=
          category_offsets.row(static_cast<Eigen::Index>(truth.item_category[i] * M + s));
    }
  }

  // Behavior sequences: sampled from each user's globally top-affinity items.
  const std::size_t pool = std::min(cfg.behavior_pool, cfg.num_items);
  const std::size_t seq_len = std::min(cfg.seq_len, pool);
  std::vector<std::vector<std::uint32_t>> sequences(cfg.num_users);
  {
    const num::Tensor2 affinity = truth.user_global * truth.item_global.transpose();
    std::vector<std::uint32_t> idx(cfg.num_items);
    for (std::size_t u = 0; u < cfg.num_users; ++u) {
      std::iota(idx.begin(), idx.end(), 0u);
      const auto row = affinity.row(static_cast<Eigen::Index>(u));
      std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(pool), idx.end(),
                        [&](std::uint32_t a, std::uint32_t b) { return row(a) > row(b) || (row(a) == row(b) && a < b); });
      std::vector<std::uint32_t> top(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(pool));
      for (std::size_t k = 0; k < seq_len; ++k) {
        std::swap(top[k], top[k + rng.below(pool - k)]);
      }
      sequences[u].assign(top.begin(), top.begin() + static_cast<std::ptrdiff_t>(seq_len));
    }
  }

  // Scenario per impression, then consecutive impressions of a scenario are
  // grouped into sessions of one user.
  std::vector<double> cumulative(M);
  std::partial_sum(cfg.scenario_skew.begin(), cfg.scenario_skew.end(), cumulative.begin());
  std::vector<std::size_t> counts(M, 0);
  for (std::size_t i = 0; i < cfg.num_impressions; ++i) {
    const double r = rng.uniform();
    std::size_t s = 0;
    while (s + 1 < M && r >= cumulative[s]) ++s;
    ++counts[s];
  }

  SyntheticData out;
  Dataset& ds = out.dataset;
  ds.users = Vocabulary::identity(cfg.num_users);
  ds.items = Vocabulary::identity(cfg.num_items);
  ds.num_scenarios = M;
  ds.side = {Vocabulary::identity(cfg.num_categories), Vocabulary::identity(num_brands)};
  ds.interactions.reserve(cfg.num_impressions);

  std::uint64_t session = 0;
  for (std::size_t s = 0; s < M; ++s) {
    for (std::size_t done = 0; done < counts[s]; ++session) {
      const auto user = static_cast<std::uint32_t>(rng.below(cfg.num_users));
      const std::size_t n = std::min(cfg.session_size, counts[s] - done);
      for (std::size_t k = 0; k < n; ++k, ++done) {
        Interaction x;
        x.user = user;
        x.item = static_cast<std::uint32_t>(rng.below(cfg.num_items));
        x.scenario = static_cast<std::uint32_t>(s);
        x.session = session;
        x.behaviors = sequences[user];
        x.side_features = {truth.item_category[x.item], truth.item_brand[x.item]};
        const double noise = cfg.noise > 0.0 ? cfg.noise * rng.logistic() : 0.0;
        x.label = true_logit(cfg, truth, x.user, x.item, s) + noise > 0.0 ? 1 : 0;
        ds.interactions.push_back(std::move(x));
      }
    }
  }
  out.truth = std::move(truth);
  return out;
}

}  // namespace gsvr::data
