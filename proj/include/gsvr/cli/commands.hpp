#pragma once

#include "gsvr/cli/run_config.hpp"
#include "gsvr/eval/report.hpp"
#include "gsvr/model/gsvr.hpp"
#include "gsvr/model/trainer.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace gsvr::cli {

struct SplitData {
  data::Dataset all;
  data::Dataset train;
  data::Dataset valid;
  data::Dataset test;
};

SplitData split_dataset(data::Dataset all);

// Loads cfg.data, or generates synthetic data into <out>/data.tsv and reads
// it back when no path is set.
data::Dataset resolve_dataset(const RunConfig& cfg);

struct TrainResult {
  model::GsvrModel model;
  std::vector<model::EpochStats> epochs;
  eval::MetricsReport test;   // after the final epoch
  std::filesystem::path checkpoint;
};

// Trains on the train split and writes <out>/model.ckpt, its .cfg sidecar and
// <out>/metrics.jsonl. Each epoch emits train, valid and test lines to both
// the file and `stream` (when given).
TrainResult train_run(const RunConfig& cfg, const SplitData& data, std::ostream* stream);

eval::MetricsReport evaluate(const model::GsvrModel& model, const data::Dataset& ds, const std::string& split,
                             std::size_t batch_size = 4096);

// Model from a checkpoint and its .cfg sidecar, sized for ds.
model::GsvrModel load_model(const std::filesystem::path& checkpoint, const data::Dataset& ds);
void save_model(const std::filesystem::path& checkpoint, const RunConfig& cfg, const model::GsvrModel& model);

int cmd_gen_data(const RunConfig& cfg, std::ostream& out);
int cmd_train(const RunConfig& cfg, std::ostream& out);
int cmd_eval(const RunConfig& cfg, std::ostream& out);
int cmd_ablate(const RunConfig& cfg, std::ostream& out);
int cmd_sweep_alpha(const RunConfig& cfg, std::ostream& out);
int cmd_quantize(const RunConfig& cfg, std::ostream& out);

// Keeps freed tape buffers in the heap between batches instead of returning
// them to the OS (glibc only; no-op elsewhere).
void configure_allocator();

// Parses argv, dispatches the verb and maps errors to exit codes:
// 0 success, 1 usage/config, 2 data, 3 numeric.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gsvr::cli
