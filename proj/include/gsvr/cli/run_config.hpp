#pragma once

#include "gsvr/data/synthetic.hpp"
#include "gsvr/embeddings/adam.hpp"
#include "gsvr/model/config.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace gsvr::cli {

struct RunConfig {
  model::GsvrConfig model;
  data::SynthConfig synth;
  emb::AdamHyper adam;
  std::uint64_t seed = 1;
  std::size_t epochs = 10;
  std::size_t batch_size = 512;
  std::string data;  // interaction log; empty means generate synthetic data
  std::filesystem::path out = "out";
  std::vector<double> alphas = {0.1, 0.3, 0.5, 0.7, 0.9};
  unsigned bits = 8;
  std::string checkpoint;
  std::string split = "test";
  std::size_t eval_batch_size = 4096;

  void validate() const;
};

// Keys accepted in config files and as --key overrides, in a fixed order.
const std::vector<std::string>& config_keys();
// Keys that describe the model architecture; stored next to checkpoints.
const std::vector<std::string>& model_keys();

void set_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_value(const RunConfig& cfg, const std::string& key);

// key=value lines, '#' comments, blank lines ignored.
std::map<std::string, std::string> parse_key_values(std::istream& in);
void apply_file(RunConfig& cfg, const std::filesystem::path& path);
void write_key_values(std::ostream& out, const RunConfig& cfg, const std::vector<std::string>& keys);

}  // namespace gsvr::cli
