#include "gsvr/eval/metrics.hpp"

#include "gsvr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

namespace gsvr::eval {

namespace {

// Midranks (1-based) of values, plus Σ(t³ − t) over tie groups.
std::vector<double> midranks(std::span<const double> values, double* tie_term = nullptr) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  double ties = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    const auto t = static_cast<double>(j - i + 1);
    ties += t * t * t - t;
    i = j + 1;
  }
  if (tie_term) *tie_term = ties;
  return ranks;
}

}  // namespace

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw DimensionError("auc: scores and labels differ in length");
  const auto ranks = midranks(scores);
  double positive_rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      positive_rank_sum += ranks[i];
      ++pos;
    }
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw UndefinedMetricError("auc needs at least one positive and one negative");
  const double np = static_cast<double>(pos);
  const double u = positive_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(neg));
}

void ScoredSet::validate() const {
  if (labels.size() != scores.size() || group_ids.size() != scores.size() ||
      (!scenario_ids.empty() && scenario_ids.size() != scores.size())) {
    throw DimensionError("scored set columns differ in length");
  }
}

std::uint64_t session_group(std::uint64_t user, std::uint64_t session) {
  return (user << 40) ^ session;
}

double s_gauc(const ScoredSet& set) {
  set.validate();
  // std::map keeps group iteration order independent of hashing.
  std::map<std::uint64_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < set.size(); ++i) groups[set.group_ids[i]].push_back(i);
  double weighted = 0.0;
  double weight = 0.0;
  std::vector<double> s;
  std::vector<std::uint8_t> l;
  for (const auto& [id, members] : groups) {
    std::size_t pos = 0;
    for (std::size_t i : members) pos += set.labels[i];
    if (pos == 0 || pos == members.size()) continue;
    s.clear();
    l.clear();
    for (std::size_t i : members) {
      s.push_back(set.scores[i]);
      l.push_back(set.labels[i]);
    }
    const auto w = static_cast<double>(members.size());
    weighted += w * auc(s, l);
    weight += w;
  }
  if (weight == 0.0) throw UndefinedMetricError("s_gauc: no group contains both classes");
  return weighted / weight;
}

MannWhitney mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ContractError("mann_whitney_u: both samples must be nonempty");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  double tie_term = 0.0;
  const auto ranks = midranks(pooled, &tie_term);
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const double n = n1 + n2;
  double rank_sum_a = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) rank_sum_a += ranks[i];

  MannWhitney out;
  out.u = rank_sum_a - n1 * (n1 + 1.0) / 2.0;
  const double mean_u = n1 * n2 / 2.0;
  const double var_u = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (var_u <= 0.0) {
    // Every observation tied: no evidence either way.
    out.z = 0.0;
    out.p_value = 1.0;
    return out;
  }
  const double diff = out.u - mean_u;
  const double corrected = std::max(0.0, std::abs(diff) - 0.5);
  out.z = std::copysign(corrected / std::sqrt(var_u), diff);
  out.p_value = std::min(1.0, std::erfc(corrected / std::sqrt(var_u) / std::sqrt(2.0)));
  return out;
}

}  // namespace gsvr::eval
