#pragma once

#include "gsvr/data/dataset.hpp"
#include "gsvr/eval/metrics.hpp"
#include "gsvr/model/loss.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gsvr::eval {

struct ScenarioMetrics {
  std::uint32_t scenario = 0;
  std::size_t count = 0;
  std::optional<double> auc;     // empty when undefined
  std::optional<double> s_gauc;
};

struct MetricsReport {
  std::optional<std::size_t> epoch;
  std::string split;
  std::size_t count = 0;
  std::optional<double> auc;
  std::optional<double> s_gauc;
  std::vector<ScenarioMetrics> scenarios;  // one per scenario id < M
  std::optional<model::LossBreakdown> loss;
};

ScoredSet scored_set(const data::Dataset& ds, std::span<const double> scores);

// Overall and per-scenario metrics; undefined ones are left empty.
MetricsReport build_report(const data::Dataset& ds, std::span<const double> scores, const std::string& split);

// One JSON object per line with keys epoch, split, count, auc, s_gauc,
// loss.pred, loss.kl_user, loss.kl_item, loss.kl_anchor_user,
// loss.kl_anchor_item, loss.total and scenario (a list of
// {id, count, auc, s_gauc}). Undefined metrics are null.
std::string to_json_line(const MetricsReport& report);

}  // namespace gsvr::eval
