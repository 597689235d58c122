#include "gsvr/eval/report.hpp"

#include "gsvr/errors.hpp"
#include "gsvr/eval/metrics.hpp"

#include <json.hpp>

namespace gsvr::eval {

namespace {

std::optional<double> try_metric(auto&& fn) {
  try {
    return fn();
  } catch (const UndefinedMetricError&) {
    return std::nullopt;
  }
}

nlohmann::ordered_json nullable(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

ScoredSet scored_set(const data::Dataset& ds, std::span<const double> scores) {
  if (scores.size() != ds.size()) {
    throw DimensionError("got " + std::to_string(scores.size()) + " scores for " + std::to_string(ds.size()) +
                         " interactions");
  }
  ScoredSet set;
  set.scores.assign(scores.begin(), scores.end());
  for (const auto& x : ds.interactions) {
    set.labels.push_back(x.label);
    set.group_ids.push_back(session_group(ds.users.raw(x.user), x.session));
    set.scenario_ids.push_back(x.scenario);
  }
  return set;
}

MetricsReport build_report(const data::Dataset& ds, std::span<const double> scores, const std::string& split) {
  const ScoredSet all = scored_set(ds, scores);
  MetricsReport report;
  report.split = split;
  report.count = all.size();
  report.auc = try_metric([&] { return auc(all.scores, all.labels); });
  report.s_gauc = try_metric([&] { return s_gauc(all); });

  std::vector<ScoredSet> parts(ds.num_scenarios);
  for (std::size_t i = 0; i < all.size(); ++i) {
    ScoredSet& p = parts[all.scenario_ids[i]];
    p.scores.push_back(all.scores[i]);
    p.labels.push_back(all.labels[i]);
    p.group_ids.push_back(all.group_ids[i]);
    p.scenario_ids.push_back(all.scenario_ids[i]);
  }
  for (std::size_t s = 0; s < parts.size(); ++s) {
    const ScoredSet& p = parts[s];
    ScenarioMetrics m;
    m.scenario = static_cast<std::uint32_t>(s);
    m.count = p.size();
    m.auc = try_metric([&] { return auc(p.scores, p.labels); });
    m.s_gauc = try_metric([&] { return s_gauc(p); });
    report.scenarios.push_back(m);
  }
  return report;
}

std::string to_json_line(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["epoch"] = report.epoch ? nlohmann::ordered_json(*report.epoch) : nlohmann::ordered_json(nullptr);
  j["split"] = report.split;
  j["count"] = report.count;
  j["auc"] = nullable(report.auc);
  j["s_gauc"] = nullable(report.s_gauc);
  if (report.loss) {
    const auto& l = *report.loss;
    j["loss.pred"] = l.pred_loss;
    j["loss.kl_user"] = l.kl_user_post;
    j["loss.kl_item"] = l.kl_item_post;
    j["loss.kl_anchor_user"] = l.kl_user_anchor;
    j["loss.kl_anchor_item"] = l.kl_item_anchor;
    j["loss.total"] = l.total;
  }
  auto& list = j["scenario"] = nlohmann::ordered_json::array();
  for (const auto& m : report.scenarios) {
    nlohmann::ordered_json e;
    e["id"] = m.scenario;
    e["count"] = m.count;
    e["auc"] = nullable(m.auc);
    e["s_gauc"] = nullable(m.s_gauc);
    list.push_back(std::move(e));
  }
  return j.dump();
}

}  // namespace gsvr::eval
