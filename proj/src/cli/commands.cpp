#include "gsvr/cli/commands.hpp"

#include "gsvr/embeddings/checkpoint.hpp"
#include "gsvr/errors.hpp"
#include "gsvr/eval/metrics.hpp"
#include "gsvr/model/quantize.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#if defined(__GLIBC__)
#include <malloc.h>
#endif
#include <iomanip>
#include <sstream>

namespace gsvr::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

fs::path checkpoint_path(const RunConfig& cfg) {
  return cfg.checkpoint.empty() ? cfg.out / "model.ckpt" : fs::path(cfg.checkpoint);
}

fs::path data_path(const RunConfig& cfg) { return cfg.data.empty() ? cfg.out / "data.tsv" : fs::path(cfg.data); }

fs::path sidecar(const fs::path& checkpoint) { return fs::path(checkpoint.string() + ".cfg"); }

ordered_json matrix_json(const num::Tensor2& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json nullable(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::string cell(const std::optional<double>& v) {
  if (!v) return "NA";
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << *v;
  return os.str();
}

RunConfig with_run_dir(const RunConfig& cfg, const fs::path& dir) {
  RunConfig c = cfg;
  c.out = dir;
  c.data = data_path(cfg).string();
  c.checkpoint.clear();
  return c;
}

// Dataset used by ablate and sweep runs: generated once and shared.
SplitData shared_data(const RunConfig& cfg) {
  ensure_dir(cfg.out);
  return split_dataset(resolve_dataset(cfg));
}

}  // namespace

SplitData split_dataset(data::Dataset all) {
  SplitData s;
  s.train = data::select_split(all, data::Split::Train);
  s.valid = data::select_split(all, data::Split::Valid);
  s.test = data::select_split(all, data::Split::Test);
  s.all = std::move(all);
  return s;
}

data::Dataset resolve_dataset(const RunConfig& cfg) {
  if (!cfg.data.empty()) return data::load_log(cfg.data);
  ensure_dir(cfg.out);
  const fs::path path = cfg.out / "data.tsv";
  data::SyntheticData synth = data::generate_synthetic(cfg.synth, cfg.seed);
  data::save_log(path, synth.dataset, "synthetic interaction log, seed " + std::to_string(cfg.seed));
  return data::load_log(path);
}

eval::MetricsReport evaluate(const model::GsvrModel& model, const data::Dataset& ds, const std::string& split,
                             std::size_t batch_size) {
  const std::vector<double> scores = model::score_dataset(model, ds, batch_size);
  return eval::build_report(ds, scores, split);
}

void save_model(const fs::path& checkpoint, const RunConfig& cfg, const model::GsvrModel& model) {
  emb::save_checkpoint(checkpoint, model.parameters());
  std::ofstream out = open_out(sidecar(checkpoint));
  write_key_values(out, cfg, model_keys());
}

model::GsvrModel load_model(const fs::path& checkpoint, const data::Dataset& ds) {
  if (!fs::exists(checkpoint)) throw IoError("checkpoint not found: " + checkpoint.string());
  const fs::path cfg_path = sidecar(checkpoint);
  if (!fs::exists(cfg_path)) throw IoError("model config not found next to checkpoint: " + cfg_path.string());
  RunConfig cfg;
  apply_file(cfg, cfg_path);
  model::GsvrModel model(cfg.model, model::vocab_of(ds), 0);
  model.load_tables(emb::load_checkpoint(checkpoint));
  return model;
}

TrainResult train_run(const RunConfig& cfg, const SplitData& data, std::ostream* stream) {
  cfg.validate();
  if (data.train.empty()) throw ContractError("training split is empty");
  ensure_dir(cfg.out);
  std::ofstream metrics = open_out(cfg.out / "metrics.jsonl");
  auto emit = [&](const eval::MetricsReport& r) {
    const std::string line = eval::to_json_line(r);
    metrics << line << '\n';
    if (stream) *stream << line << '\n' << std::flush;
  };

  model::GsvrModel model(cfg.model, model::vocab_of(data.all), cfg.seed);
  const model::TrainOptions opts{cfg.batch_size, cfg.adam};
  std::vector<model::EpochStats> history;
  eval::MetricsReport test;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    history.push_back(model::train_epoch(model, data.train, opts, epoch, cfg.seed));
    eval::MetricsReport train = evaluate(model, data.train, "train", cfg.eval_batch_size);
    train.epoch = epoch;
    train.loss = history.back().loss;
    emit(train);
    if (!data.valid.empty()) {
      eval::MetricsReport valid = evaluate(model, data.valid, "valid", cfg.eval_batch_size);
      valid.epoch = epoch;
      emit(valid);
    }
    if (!data.test.empty()) {
      test = evaluate(model, data.test, "test", cfg.eval_batch_size);
      test.epoch = epoch;
      emit(test);
    }
  }
  const fs::path ckpt = cfg.out / "model.ckpt";
  save_model(ckpt, cfg, model);
  return TrainResult{std::move(model), std::move(history), std::move(test), ckpt};
}

int cmd_gen_data(const RunConfig& cfg, std::ostream& out) {
  cfg.synth.validate();
  ensure_dir(cfg.out);
  const fs::path path = cfg.out / "data.tsv";
  data::SyntheticData synth = data::generate_synthetic(cfg.synth, cfg.seed);
  data::save_log(path, synth.dataset, "synthetic interaction log, seed " + std::to_string(cfg.seed));

  ordered_json meta;
  meta["seed"] = cfg.seed;
  meta["impressions"] = synth.dataset.size();
  meta["users"] = synth.dataset.num_users();
  meta["items"] = synth.dataset.num_items();
  meta["scenario_counts"] = data::scenario_counts(synth.dataset);
  meta["label_rate"] = data::label_rate(synth.dataset);
  ordered_json truth;
  truth["user_global"] = matrix_json(synth.truth.user_global);
  truth["item_global"] = matrix_json(synth.truth.item_global);
  truth["user_offsets"] = matrix_json(synth.truth.user_offsets);
  truth["item_offsets"] = matrix_json(synth.truth.item_offsets);
  truth["item_category"] = synth.truth.item_category;
  truth["item_brand"] = synth.truth.item_brand;
  meta["truth"] = std::move(truth);
  std::ofstream meta_out = open_out(cfg.out / "data.meta.json");
  meta_out << meta.dump() << '\n';

  ordered_json line;
  line["data"] = path.string();
  line["impressions"] = synth.dataset.size();
  line["scenario_counts"] = data::scenario_counts(synth.dataset);
  line["label_rate"] = data::label_rate(synth.dataset);
  out << line.dump() << '\n';
  return 0;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  train_run(cfg, split_dataset(resolve_dataset(cfg)), &out);
  return 0;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  const data::Dataset all = data::load_log(data_path(cfg));
  const data::Split split = data::parse_split(cfg.split);
  const model::GsvrModel model = load_model(checkpoint_path(cfg), all);
  const data::Dataset part = data::select_split(all, split);
  if (part.empty()) throw ContractError("split '" + cfg.split + "' is empty");
  out << eval::to_json_line(evaluate(model, part, data::to_string(split), cfg.eval_batch_size)) << '\n';
  return 0;
}

int cmd_ablate(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const SplitData data = shared_data(cfg);
  std::ofstream table = open_out(cfg.out / "ablation.tsv");
  table << "variant\tseed\toverall";
  for (std::size_t s = 0; s < data.all.num_scenarios; ++s) table << "\tscenario_" << s;
  table << '\n';
  for (auto variant : {model::Variant::Full, model::Variant::Distinct, model::Variant::Uniform, model::Variant::RMoE}) {
    RunConfig run = with_run_dir(cfg, cfg.out / ("ablate_" + model::to_string(variant)));
    run.model.variant = variant;
    const TrainResult r = train_run(run, data, nullptr);
    ordered_json line;
    line["variant"] = model::to_string(variant);
    line["seed"] = cfg.seed;
    line["auc"] = nullable(r.test.auc);
    line["s_gauc"] = nullable(r.test.s_gauc);
    ordered_json per = ordered_json::array();
    table << model::to_string(variant) << '\t' << cfg.seed << '\t' << cell(r.test.auc);
    for (const auto& m : r.test.scenarios) {
      per.push_back({{"id", m.scenario}, {"count", m.count}, {"auc", nullable(m.auc)}, {"s_gauc", nullable(m.s_gauc)}});
      table << '\t' << cell(m.auc);
    }
    table << '\n';
    line["scenario"] = std::move(per);
    out << line.dump() << '\n' << std::flush;
  }
  return 0;
}

int cmd_sweep_alpha(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const SplitData data = shared_data(cfg);
  std::ofstream table = open_out(cfg.out / "sweep.tsv");
  table << "alpha\tauc\ts_gauc\n";
  std::optional<double> best_alpha;
  double best_auc = -1.0;
  for (double alpha : cfg.alphas) {
    std::ostringstream name;
    name << "sweep_alpha_" << alpha;
    RunConfig run = with_run_dir(cfg, cfg.out / name.str());
    run.model.alpha = alpha;
    const TrainResult r = train_run(run, data, nullptr);
    ordered_json line;
    line["alpha"] = alpha;
    line["seed"] = cfg.seed;
    line["auc"] = nullable(r.test.auc);
    line["s_gauc"] = nullable(r.test.s_gauc);
    out << line.dump() << '\n' << std::flush;
    table << alpha << '\t' << cell(r.test.auc) << '\t' << cell(r.test.s_gauc) << '\n';
    if (r.test.auc && *r.test.auc > best_auc) {
      best_auc = *r.test.auc;
      best_alpha = alpha;
    }
  }
  ordered_json advisory;
  advisory["best_alpha"] = nullable(best_alpha);
  const bool interior =
      best_alpha && cfg.alphas.size() > 2 && *best_alpha != cfg.alphas.front() && *best_alpha != cfg.alphas.back();
  advisory["interior_peak"] = interior;
  out << advisory.dump() << '\n';
  return 0;
}

int cmd_quantize(const RunConfig& cfg, std::ostream& out) {
  model::check_bits(cfg.bits);
  const data::Dataset all = data::load_log(data_path(cfg));
  const data::Split split = data::parse_split(cfg.split);
  model::GsvrModel model = load_model(checkpoint_path(cfg), all);

  std::vector<const emb::ParamTable*> tables;
  for (emb::ParamTable* t : model.scenario_specific_tables()) tables.push_back(t);
  const model::QuantizationResult q = model::quantize_scenario_embeddings(tables, cfg.bits);
  ensure_dir(cfg.out);
  const fs::path qpath = cfg.out / "model.gsvq";
  model::save_quantized(qpath, q.tables);

  model::GsvrModel restored = model;
  auto targets = restored.scenario_specific_tables();
  for (std::size_t i = 0; i < targets.size(); ++i) targets[i]->weights = model::dequantize(q.tables[i]).weights;

  const data::Dataset part = data::select_split(all, split);
  if (part.empty()) throw ContractError("split '" + cfg.split + "' is empty");
  const eval::MetricsReport before = evaluate(model, part, data::to_string(split), cfg.eval_batch_size);
  const eval::MetricsReport after = evaluate(restored, part, data::to_string(split), cfg.eval_batch_size);

  std::size_t qbytes = 0;
  std::size_t fbytes = 0;
  for (const auto& t : q.tables) {
    qbytes += t.storage_bytes();
    fbytes += t.float32_bytes();
  }
  ordered_json line;
  line["quantized"] = qpath.string();
  line["bits"] = cfg.bits;
  line["quantized_bytes"] = qbytes;
  line["float32_bytes"] = fbytes;
  line["memory_ratio"] = q.memory_ratio;
  line["max_abs_error"] = q.max_abs_error;
  line["split"] = data::to_string(split);
  line["auc"] = nullable(before.auc);
  line["auc_quantized"] = nullable(after.auc);
  line["auc_delta"] = before.auc && after.auc ? ordered_json(*after.auc - *before.auc) : ordered_json(nullptr);
  line["s_gauc"] = nullable(before.s_gauc);
  line["s_gauc_quantized"] = nullable(after.s_gauc);
  out << line.dump() << '\n';
  return 0;
}

void configure_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scenario-wise variational representation training and evaluation", "gsvr"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);

  const auto& keys = config_keys();
  std::vector<std::string> values(keys.size());
  std::vector<CLI::Option*> options;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    std::string names = "--" + keys[i];
    std::string dashed = keys[i];
    std::replace(dashed.begin(), dashed.end(), '_', '-');
    if (dashed != keys[i]) names += ",--" + dashed;
    options.push_back(app.add_option(names, values[i], "overrides config key " + keys[i]));
  }

  using Command = int (*)(const RunConfig&, std::ostream&);
  const std::vector<std::pair<std::string, Command>> verbs = {
      {"gen-data", cmd_gen_data}, {"train", cmd_train},     {"eval", cmd_eval},
      {"ablate", cmd_ablate},     {"sweep-alpha", cmd_sweep_alpha}, {"quantize", cmd_quantize}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, fn] : verbs) subs.push_back(app.add_subcommand(name)->fallthrough());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) apply_file(cfg, config_path);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (options[i]->count() > 0) set_value(cfg, keys[i], values[i]);
    }
    for (std::size_t i = 0; i < verbs.size(); ++i) {
      if (subs[i]->parsed()) return verbs[i].second(cfg, out);
    }
    return 1;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const ContractError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const DomainError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace gsvr::cli
