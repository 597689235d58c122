#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gsvr::eval {

// Probability that a random positive outranks a random negative, ties
// counting one half. Rank statistic, O(n log n). Throws
// UndefinedMetricError unless both classes are present.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct ScoredSet {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint64_t> group_ids;
  std::vector<std::uint32_t> scenario_ids;

  std::size_t size() const { return scores.size(); }
  void validate() const;
};

// Group-count-weighted mean of per-group AUCs over groups containing both
// classes. Throws UndefinedMetricError when no group qualifies.
double s_gauc(const ScoredSet& set);

// Composite group key for (user, session).
std::uint64_t session_group(std::uint64_t user, std::uint64_t session);

struct MannWhitney {
  double u = 0.0;        // U of sample a: wins over b plus half the ties
  double z = 0.0;
  double p_value = 1.0;  // two-sided, normal approximation
};

MannWhitney mann_whitney_u(std::span<const double> a, std::span<const double> b);

}  // namespace gsvr::eval
