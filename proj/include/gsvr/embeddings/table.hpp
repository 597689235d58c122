#pragma once

#include "gsvr/numerics/rng.hpp"
#include "gsvr/numerics/tape.hpp"
#include "gsvr/numerics/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gsvr::emb {

using num::Tensor2;

// Id-indexed parameter rows with per-row Adam state. Embedding tables and the
// weight/bias matrices of every network share this storage type, so a model
// is just an ordered list of tables.
struct ParamTable {
  std::string name;
  Tensor2 weights;
  Tensor2 adam_m;
  Tensor2 adam_v;
  std::vector<std::uint64_t> step_counts;  // one per row

  ParamTable() = default;
  ParamTable(std::string table_name, std::size_t vocab_size, std::size_t dim);

  std::size_t vocab_size() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(weights.cols()); }
};

// Exact equality of name, shapes, weights, moments and step counts.
bool identical(const ParamTable& a, const ParamTable& b);

using EmbeddingTable = ParamTable;

// Uniform Xavier init over ±sqrt(6 / (fan_in + fan_out)). Embedding rows use
// the symmetric fan pair (dim, dim).
ParamTable xavier_init(std::string name, std::size_t vocab_size, std::size_t dim, num::Rng& rng);
ParamTable xavier_init(std::string name, std::size_t vocab_size, std::size_t dim, std::size_t fan_in,
                       std::size_t fan_out, num::Rng& rng);
double xavier_bound(std::size_t fan_in, std::size_t fan_out);

ParamTable zeros(std::string name, std::size_t vocab_size, std::size_t dim);

// Row gather recorded on the tape; gradients flow only to gathered rows.
num::Var lookup(num::Tape& tape, const ParamTable& table, std::span<const std::size_t> ids);
// Whole-table leaf (dense layer weights).
num::Var parameter(num::Tape& tape, const ParamTable& table);

// Table addressed by (entity, scenario) with a dense composite row space.
class ScenarioKeyedTable {
 public:
  ScenarioKeyedTable() = default;
  ScenarioKeyedTable(ParamTable base, std::size_t num_entities, std::size_t num_scenarios);

  std::size_t index(std::size_t entity, std::size_t scenario) const;
  std::size_t num_entities() const { return num_entities_; }
  std::size_t num_scenarios() const { return num_scenarios_; }

  ParamTable& base() { return base_; }
  const ParamTable& base() const { return base_; }

 private:
  ParamTable base_;
  std::size_t num_entities_ = 0;
  std::size_t num_scenarios_ = 0;
};

ScenarioKeyedTable xavier_init_keyed(std::string name, std::size_t num_entities, std::size_t num_scenarios,
                                     std::size_t dim, num::Rng& rng);

}  // namespace gsvr::emb
