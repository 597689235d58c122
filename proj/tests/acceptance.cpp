// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails. Training runs are shared between criteria and cached under
// --work for the lifetime of one invocation.

#include "gsvr/cli/commands.hpp"
#include "gsvr/cli/run_config.hpp"
#include "gsvr/data/synthetic.hpp"
#include "gsvr/encoder/gaussian.hpp"
#include "gsvr/eval/metrics.hpp"
#include "gsvr/model/gsvr.hpp"
#include "gsvr/numerics/finite_diff.hpp"
#include "gsvr/numerics/rng.hpp"
#include "gsvr/numerics/tape.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

using namespace gsvr;
using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances and budgets.
constexpr double kFdStep = 1e-5;
constexpr double kFdRel = 1e-4;
constexpr double kFdAbs = 1e-7;
constexpr double kGradBudgetSec = 120;
constexpr std::size_t kKlSamples = 1000000;
constexpr double kKlMcRel = 0.01;
constexpr double kKlSelfTol = 1e-12;
constexpr double kKlHandTol = 1e-9;
constexpr double kKlBudgetSec = 60;
constexpr double kInferTol = 1e-12;
constexpr double kAucTol = 1e-12;
constexpr double kLossDrop = 0.20;
constexpr double kMinTestAuc = 0.60;
constexpr double kLearnBudgetSec = 15 * 60;
constexpr double kAblationBudgetSec = 45 * 60;
constexpr double kDefaultAlpha = 0.5;
constexpr double kMaxMemoryRatio = 0.35;
constexpr double kMaxAucDegradation = 0.005;
constexpr double kInvarianceTol = 1e-12;
const std::vector<std::uint64_t> kSeeds = {1, 2, 3};
const std::vector<double> kAlphas = {0.1, 0.3, 0.5, 0.7, 0.9};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::map<int, Verdict> verdicts;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  verdicts[id] = {pass, detail};
  std::cout << "criterion " << id << " " << (pass ? "PASS" : "FAIL") << " " << name << ": " << detail << std::endl;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

data::SynthConfig small_synth() {
  data::SynthConfig c;
  c.num_users = 120;
  c.num_items = 90;
  c.num_impressions = 4000;
  c.num_categories = 6;
  c.brands_per_category = 3;
  c.behavior_pool = 15;
  return c;
}

data::Batch batch_of(const data::Dataset& ds, std::size_t n, std::size_t offset) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = (offset + i) % ds.size();
  return data::make_batch(ds, idx);
}

// ---------------------------------------------------------------------------

void gradient_check() {
  const auto t0 = Clock::now();
  const data::Dataset ds = data::generate_synthetic(small_synth(), 17).dataset;
  // Default depth, sample count and expert layout at reduced widths.
  model::GsvrConfig cfg;
  cfg.variant = model::Variant::Full;
  cfg.embed_dim = 24;
  cfg.latent_dim = 24;
  cfg.mlp_hidden = {128, 64, 32};
  cfg.encoder_hidden = 32;
  cfg.prior_hidden = 32;
  model::GsvrModel m(cfg, model::vocab_of(ds), 5);
  const data::Batch b = batch_of(ds, 4, 37);
  num::Rng rng(6);
  const model::Noise noise = m.draw_noise(b.size(), rng);

  num::Tape tape;
  const num::Gradients grads = tape.backward(m.forward_train(tape, b, noise).total);
  auto f = [&] {
    num::Tape t;
    return m.forward_train(t, b, noise).total.scalar();
  };

  std::size_t checked = 0, bad = 0, tables = 0;
  std::string first_bad;
  for (emb::ParamTable* p : m.parameters()) {
    ++tables;
    std::set<std::size_t> rows;
    if (const num::RowGradient* rg = grads.find(p->weights)) rows.insert(rg->rows.begin(), rg->rows.end());
    // Two rows outside the gathered set must have zero gradient both ways.
    for (std::size_t r = 0, extra = 0; r < p->vocab_size() && extra < 2; ++r) {
      if (!rows.count(r)) {
        rows.insert(r);
        ++extra;
      }
    }
    const std::vector<std::size_t> list(rows.begin(), rows.end());
    const num::Tensor2 fd = num::finite_diff_rows(f, p->weights, list, kFdStep);
    const num::Tensor2 g = grads.dense(p->weights);
    for (std::size_t r : list) {
      const auto row = static_cast<Eigen::Index>(r);
      for (Eigen::Index c = 0; c < g.cols(); ++c) {
        ++checked;
        if (!num::gradients_agree(g(row, c), fd(row, c), kFdRel, kFdAbs)) {
          if (!bad) first_bad = p->name + "[" + std::to_string(r) + "," + std::to_string(c) + "] tape " +
                                fmt(g(row, c), 10) + " fd " + fmt(fd(row, c), 10);
          ++bad;
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  std::string detail = std::to_string(checked) + " coordinates in " + std::to_string(tables) + " tables, " +
                       std::to_string(bad) + " mismatches, " + fmt(secs, 3) + "s";
  if (bad) detail += ", first " + first_bad;
  report(1, "gradient check", bad == 0 && checked > 0 && secs < kGradBudgetSec, detail);
}

// ---------------------------------------------------------------------------

double kl_value(const num::Tensor2& mq, const num::Tensor2& sq, const num::Tensor2& mp, const num::Tensor2& sp) {
  num::Tape t;
  const enc::DiagGaussian q{t.constant(mq), t.constant(sq)};
  const enc::DiagGaussian p{t.constant(mp), t.constant(sp)};
  return enc::kl_diag(q, p).value()(0, 0);
}

double log_density(const num::Tensor2& m, const num::Tensor2& s, const std::vector<double>& x) {
  double l = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double z = (x[k] - m(0, static_cast<Eigen::Index>(k))) / s(0, static_cast<Eigen::Index>(k));
    l += -0.5 * z * z - std::log(s(0, static_cast<Eigen::Index>(k))) - 0.5 * std::log(2 * std::numbers::pi);
  }
  return l;
}

void kl_oracle() {
  const auto t0 = Clock::now();
  num::Rng rng(2024);
  const Eigen::Index d = 4;
  double worst_rel = 0;
  double worst_self = 0;
  for (int pair = 0; pair < 20; ++pair) {
    num::Tensor2 mq(1, d), sq(1, d), mp(1, d), sp(1, d);
    for (Eigen::Index k = 0; k < d; ++k) {
      mq(0, k) = rng.uniform(-2, 2);
      mp(0, k) = rng.uniform(-2, 2);
      sq(0, k) = rng.uniform(0.5, 2);
      sp(0, k) = rng.uniform(0.5, 2);
    }
    const double closed = kl_value(mq, sq, mp, sp);
    double acc = 0;
    std::vector<double> x(static_cast<std::size_t>(d));
    for (std::size_t n = 0; n < kKlSamples; ++n) {
      for (Eigen::Index k = 0; k < d; ++k) x[static_cast<std::size_t>(k)] = mq(0, k) + sq(0, k) * rng.normal();
      acc += log_density(mq, sq, x) - log_density(mp, sp, x);
    }
    const double mc = acc / static_cast<double>(kKlSamples);
    worst_rel = std::max(worst_rel, std::abs(mc - closed) / closed);
    worst_self = std::max(worst_self, std::abs(kl_value(mq, sq, mq, sq)));
  }
  const num::Tensor2 zero = num::Tensor2::Zero(1, 1), one = num::Tensor2::Ones(1, 1);
  const double hand_a = kl_value(one, one, zero, one);                          // N(1,1) vs N(0,1)
  const double hand_b = kl_value(zero, num::Tensor2::Constant(1, 1, 2.0), zero, one);  // N(0,4) vs N(0,1)
  const double err_a = std::abs(hand_a - 0.5);
  const double err_b = std::abs(hand_b - (1.5 - std::log(2.0)));
  const double secs = seconds_since(t0);
  const bool pass = worst_rel <= kKlMcRel && worst_self <= kKlSelfTol && err_a <= kKlHandTol && err_b <= kKlHandTol &&
                    secs < kKlBudgetSec;
  report(2, "KL oracle", pass,
         "worst MC relative error " + fmt(worst_rel, 3) + " over 20 pairs, self KL " + fmt(worst_self, 3) +
             ", hand errors " + fmt(err_a, 3) + " and " + fmt(err_b, 3) + ", " + fmt(secs, 3) + "s");
}

// ---------------------------------------------------------------------------

void infer_consistency() {
  const data::Dataset ds = data::generate_synthetic(small_synth(), 23).dataset;
  double worst = 0;
  std::size_t batches = 0;
  num::Rng rng(8);
  for (auto v : {model::Variant::Full, model::Variant::Uniform, model::Variant::RMoE}) {
    model::GsvrConfig cfg;
    cfg.embed_dim = 16;
    cfg.latent_dim = 12;
    cfg.mlp_hidden = {32, 16};
    cfg.variant = v;
    const model::GsvrModel m(cfg, model::vocab_of(ds), 30 + static_cast<std::uint64_t>(v));
    for (int i = 0; i < 100; ++i) {
      const data::Batch b = batch_of(ds, 1 + rng.below(64), rng.below(ds.size()));
      num::Tape tape;
      const num::Tensor2 train = m.forward_train(tape, b, m.zero_noise(b.size())).prediction_matrix();
      const num::Tensor2 infer = m.forward_infer(b);
      for (Eigen::Index c = 0; c < train.cols(); ++c) worst = std::max(worst, (train.col(c) - infer.col(0)).cwiseAbs().maxCoeff());
      ++batches;
    }
  }
  report(3, "train/infer consistency", worst <= kInferTol,
         std::to_string(batches) + " batches over full, uniform and rmoe, max difference " + fmt(worst, 3));
}

// ---------------------------------------------------------------------------

double brute_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

void random_scored(num::Rng& rng, std::vector<double>& s, std::vector<std::uint8_t>& y) {
  const std::size_t n = 2 + rng.below(199);
  const double levels = 1.0 + static_cast<double>(rng.below(25));
  s.resize(n);
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = std::floor(rng.uniform() * levels);
    y[i] = rng.uniform() < 0.5;
  }
  y[0] = 1;
  y[1] = 0;
}

void auc_oracle() {
  num::Rng rng(99);
  std::vector<double> s;
  std::vector<std::uint8_t> y;
  double worst = 0;
  std::size_t with_ties = 0;
  for (int i = 0; i < 1000; ++i) {
    random_scored(rng, s, y);
    std::set<double> distinct(s.begin(), s.end());
    with_ties += distinct.size() < s.size();
    worst = std::max(worst, std::abs(eval::auc(s, y) - brute_auc(s, y)));
  }
  const double worked = eval::auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<std::uint8_t>{0, 0, 1, 1});
  report(4, "AUC oracle", worst <= kAucTol && std::abs(worked - 0.75) <= kAucTol && with_ties > 0,
         "1000 instances (" + std::to_string(with_ties) + " with ties), max difference " + fmt(worst, 3) +
             ", worked example " + fmt(worked, 17));
}

// ---------------------------------------------------------------------------

struct RunOutcome {
  fs::path dir;
  double seconds = 0;
  std::vector<json> train;  // per epoch
  json test;                // last epoch
};

class Runs {
 public:
  explicit Runs(fs::path root) : root_(std::move(root)) {}

  static std::string key(model::Variant v, double alpha, std::uint64_t seed) {
    std::ostringstream s;
    s << model::to_string(v) << "_a" << alpha << "_s" << seed;
    return s.str();
  }

  cli::RunConfig config(model::Variant v, double alpha, std::uint64_t seed, const fs::path& dir) const {
    cli::RunConfig cfg;
    cfg.seed = seed;
    cfg.model.variant = v;
    cfg.model.alpha = alpha;
    cfg.out = dir;
    return cfg;
  }

  const RunOutcome& get(model::Variant v, double alpha, std::uint64_t seed) {
    const std::string k = key(v, alpha, seed);
    if (auto it = cache_.find(k); it != cache_.end()) return it->second;
    RunOutcome r;
    r.dir = root_ / k;
    fs::remove_all(r.dir);
    std::cerr << "training " << k << std::endl;
    const auto t0 = Clock::now();
    std::ostringstream sink;
    cli::cmd_train(config(v, alpha, seed, r.dir), sink);
    r.seconds = seconds_since(t0);
    std::istringstream lines(slurp(r.dir / "metrics.jsonl"));
    std::string line;
    while (std::getline(lines, line)) {
      json j = json::parse(line);
      if (j["split"] == "train") r.train.push_back(j);
      if (j["split"] == "test") r.test = j;
    }
    return cache_.emplace(k, std::move(r)).first->second;
  }

  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  std::map<std::string, RunOutcome> cache_;
};

double auc_of(const json& j) { return j["auc"].is_number() ? j["auc"].get<double>() : std::nan(""); }

std::size_t sparsest_scenario() {
  const data::SynthConfig c;
  return static_cast<std::size_t>(std::min_element(c.scenario_skew.begin(), c.scenario_skew.end()) -
                                  c.scenario_skew.begin());
}

void learning_sanity(Runs& runs) {
  std::size_t ok = 0;
  double secs = 0;
  std::string detail;
  for (auto seed : kSeeds) {
    const RunOutcome& r = runs.get(model::Variant::Full, kDefaultAlpha, seed);
    secs += r.seconds;
    const double first = r.train.front()["loss.total"].get<double>();
    const double last = r.train.back()["loss.total"].get<double>();
    const double drop = (first - last) / first;
    const double auc = auc_of(r.test);
    ok += drop >= kLossDrop && auc >= kMinTestAuc;
    detail += "seed " + std::to_string(seed) + " loss " + fmt(first) + "->" + fmt(last) + " (drop " + fmt(drop, 3) +
              ") test auc " + fmt(auc) + "; ";
  }
  detail += fmt(secs, 4) + "s";
  report(5, "learning sanity", ok == kSeeds.size() && secs < kLearnBudgetSec, detail);
}

void ablation(Runs& runs) {
  const std::size_t s = sparsest_scenario();
  std::size_t order = 0, full_distinct = 0, rmoe_between = 0;
  double secs = 0;
  std::string detail = "scenario " + std::to_string(s) + " test auc full/uniform/distinct/rmoe: ";
  for (auto seed : kSeeds) {
    std::map<model::Variant, double> a;
    for (auto v : {model::Variant::Full, model::Variant::Distinct, model::Variant::Uniform, model::Variant::RMoE}) {
      const RunOutcome& r = runs.get(v, kDefaultAlpha, seed);
      secs += r.seconds;
      a[v] = auc_of(r.test["scenario"][s]);
    }
    const double full = a[model::Variant::Full], uni = a[model::Variant::Uniform];
    const double dis = a[model::Variant::Distinct], rmoe = a[model::Variant::RMoE];
    order += full > uni && uni > dis;
    full_distinct += full > dis;
    rmoe_between += full > rmoe && rmoe > uni;
    detail += "seed " + std::to_string(seed) + " " + fmt(full) + "/" + fmt(uni) + "/" + fmt(dis) + "/" + fmt(rmoe) + "; ";
  }
  detail += "full>uniform>distinct " + std::to_string(order) + "/3, full>distinct " + std::to_string(full_distinct) +
            "/3, rmoe between " + std::to_string(rmoe_between) + "/3, " + fmt(secs, 4) + "s";
  report(6, "ablation ordering", order >= 2 && full_distinct == 3 && rmoe_between >= 2 && secs < kAblationBudgetSec,
         detail);
}

void alpha_sweep(Runs& runs) {
  std::ofstream curve(runs.root() / "alpha_curve.tsv");
  curve << "seed\talpha\tauc\ts_gauc\n";
  std::size_t ok = 0;
  std::string detail;
  for (auto seed : kSeeds) {
    double best = -1, best_alpha = 0;
    detail += "seed " + std::to_string(seed) + " [";
    for (double a : kAlphas) {
      const RunOutcome& r = runs.get(model::Variant::Full, a, seed);
      const double auc = auc_of(r.test);
      curve << seed << '\t' << a << '\t' << std::setprecision(17) << auc << '\t' << r.test["s_gauc"] << '\n';
      std::cout << "alpha_curve seed=" << seed << " alpha=" << a << " auc=" << fmt(auc, 6) << std::endl;
      detail += fmt(auc) + (a == kAlphas.back() ? "" : " ");
      if (auc > best) {
        best = auc;
        best_alpha = a;
      }
    }
    ok += best_alpha != kAlphas.back();
    detail += "] best alpha " + fmt(best_alpha, 2) + "; ";
  }
  detail += "curve in " + (runs.root() / "alpha_curve.tsv").string();
  report(7, "alpha sweep shape", ok == kSeeds.size(), detail);
}

void determinism(Runs& runs) {
  const RunOutcome& a = runs.get(model::Variant::Full, kDefaultAlpha, kSeeds.front());
  const fs::path dir = runs.root() / "determinism_repeat";
  fs::remove_all(dir);
  std::ostringstream sink;
  cli::cmd_train(runs.config(model::Variant::Full, kDefaultAlpha, kSeeds.front(), dir), sink);
  const bool ckpt = slurp(a.dir / "model.ckpt") == slurp(dir / "model.ckpt");
  const bool metrics = slurp(a.dir / "metrics.jsonl") == slurp(dir / "metrics.jsonl");
  report(8, "determinism", ckpt && metrics,
         std::string("checkpoint ") + (ckpt ? "identical" : "differs") + ", metrics " + (metrics ? "identical" : "differs"));
}

void quantization(Runs& runs) {
  std::size_t ok = 0;
  std::string detail;
  for (auto seed : kSeeds) {
    const RunOutcome& r = runs.get(model::Variant::Full, kDefaultAlpha, seed);
    cli::RunConfig cfg = runs.config(model::Variant::Full, kDefaultAlpha, seed, r.dir / "quantized");
    cfg.data = (r.dir / "data.tsv").string();
    cfg.checkpoint = (r.dir / "model.ckpt").string();
    cfg.bits = 8;
    std::ostringstream out;
    cli::cmd_quantize(cfg, out);
    const json j = json::parse(out.str());
    const double ratio = j["memory_ratio"].get<double>();
    const double degradation = j["auc"].get<double>() - j["auc_quantized"].get<double>();
    ok += ratio <= kMaxMemoryRatio && degradation <= kMaxAucDegradation;
    detail += "seed " + std::to_string(seed) + " ratio " + fmt(ratio) + " auc " + fmt(j["auc"].get<double>(), 6) +
              "->" + fmt(j["auc_quantized"].get<double>(), 6) + "; ";
  }
  report(9, "quantization", ok == kSeeds.size(), detail);
}

// ---------------------------------------------------------------------------

void metric_invariances() {
  num::Rng rng(7);
  std::vector<double> s, t;
  std::vector<std::uint8_t> y;
  double worst_monotone = 0, worst_single = 0;
  for (int i = 0; i < 200; ++i) {
    random_scored(rng, s, y);
    t.clear();
    for (double v : s) t.push_back(std::atan(0.3 * v) * 5 + 2);
    worst_monotone = std::max(worst_monotone, std::abs(eval::auc(s, y) - eval::auc(t, y)));
    t.clear();
    for (double v : s) t.push_back(std::exp(v / 10));
    worst_monotone = std::max(worst_monotone, std::abs(eval::auc(s, y) - eval::auc(t, y)));
    const eval::ScoredSet one{s, y, std::vector<std::uint64_t>(s.size(), 5), std::vector<std::uint32_t>(s.size(), 1)};
    worst_single = std::max(worst_single, std::abs(eval::s_gauc(one) - eval::auc(s, y)));
  }

  std::size_t mismatches = 0, cases = 0;
  for (std::size_t n1 = 1; n1 <= 8; ++n1) {
    for (std::size_t n2 = 1; n2 <= 8; ++n2) {
      for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> a(n1), b(n2);
        for (auto& v : a) v = static_cast<double>(rng.below(5));
        for (auto& v : b) v = static_cast<double>(rng.below(5));
        double u = 0;
        for (double x : a) {
          for (double z : b) u += x > z ? 1.0 : (x == z ? 0.5 : 0.0);
        }
        mismatches += eval::mann_whitney_u(a, b).u != u;
        ++cases;
      }
    }
  }
  report(10, "metric invariances",
         worst_monotone <= kInvarianceTol && worst_single <= kInvarianceTol && mismatches == 0,
         "monotone transform max difference " + fmt(worst_monotone, 3) + ", single-group s_gauc vs auc " +
             fmt(worst_single, 3) + ", Mann-Whitney U " + std::to_string(mismatches) + "/" + std::to_string(cases) +
             " mismatches");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gsvr acceptance suite"};
  std::string work = "acceptance_runs";
  std::vector<int> only;
  app.add_option("--work", work, "directory for training runs");
  app.add_option("--only", only, "criteria to run (default all)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  cli::configure_allocator();
  fs::create_directories(work);
  Runs runs(work);
  auto want = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  auto guarded = [&](int id, const std::string& name, const std::function<void()>& fn) {
    if (!want(id)) return;
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, name, false, std::string("error: ") + e.what());
    }
  };

  guarded(1, "gradient check", gradient_check);
  guarded(2, "KL oracle", kl_oracle);
  guarded(3, "train/infer consistency", infer_consistency);
  guarded(4, "AUC oracle", auc_oracle);
  guarded(10, "metric invariances", metric_invariances);
  guarded(5, "learning sanity", [&] { learning_sanity(runs); });
  guarded(8, "determinism", [&] { determinism(runs); });
  guarded(9, "quantization", [&] { quantization(runs); });
  guarded(6, "ablation ordering", [&] { ablation(runs); });
  guarded(7, "alpha sweep shape", [&] { alpha_sweep(runs); });

  std::size_t failed = 0;
  std::cout << "summary:";
  for (const auto& [id, v] : verdicts) {
    std::cout << " " << id << "=" << (v.pass ? "PASS" : "FAIL");
    failed += !v.pass;
  }
  std::cout << std::endl;
  return failed ? 1 : 0;
}
