#include "gsvr/embeddings/table.hpp"

#include "gsvr/errors.hpp"

#include <cmath>
#include <cstring>

namespace gsvr::emb {

namespace {
bool same_bits(const Tensor2& a, const Tensor2& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return a.size() == 0 || std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}
}  // namespace

ParamTable::ParamTable(std::string table_name, std::size_t vocab_size, std::size_t dim)
    : name(std::move(table_name)),
      weights(Tensor2::Zero(static_cast<Eigen::Index>(vocab_size), static_cast<Eigen::Index>(dim))),
      adam_m(Tensor2::Zero(static_cast<Eigen::Index>(vocab_size), static_cast<Eigen::Index>(dim))),
      adam_v(Tensor2::Zero(static_cast<Eigen::Index>(vocab_size), static_cast<Eigen::Index>(dim))),
      step_counts(vocab_size, 0) {}

bool identical(const ParamTable& a, const ParamTable& b) {
  return a.name == b.name && same_bits(a.weights, b.weights) && same_bits(a.adam_m, b.adam_m) &&
         same_bits(a.adam_v, b.adam_v) && a.step_counts == b.step_counts;
}

double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

ParamTable xavier_init(std::string name, std::size_t vocab_size, std::size_t dim, num::Rng& rng) {
  return xavier_init(std::move(name), vocab_size, dim, dim, dim, rng);
}

ParamTable xavier_init(std::string name, std::size_t vocab_size, std::size_t dim, std::size_t fan_in,
                       std::size_t fan_out, num::Rng& rng) {
  if (vocab_size == 0 || dim == 0) throw ContractError("xavier_init: table '" + name + "' needs vocab, dim >= 1");
  ParamTable t(std::move(name), vocab_size, dim);
  const double bound = xavier_bound(fan_in, fan_out);
  for (Eigen::Index i = 0; i < t.weights.size(); ++i) t.weights.data()[i] = rng.uniform(-bound, bound);
  return t;
}

ParamTable zeros(std::string name, std::size_t vocab_size, std::size_t dim) {
  return ParamTable(std::move(name), vocab_size, dim);
}

num::Var lookup(num::Tape& tape, const ParamTable& table, std::span<const std::size_t> ids) {
  return tape.gather(table.weights, ids, table.name.c_str());
}

num::Var parameter(num::Tape& tape, const ParamTable& table) { return tape.parameter(table.weights); }

ScenarioKeyedTable::ScenarioKeyedTable(ParamTable base, std::size_t num_entities, std::size_t num_scenarios)
    : base_(std::move(base)), num_entities_(num_entities), num_scenarios_(num_scenarios) {
  if (base_.vocab_size() != num_entities * num_scenarios) {
    throw DimensionError("scenario-keyed table '" + base_.name + "' needs " +
                         std::to_string(num_entities * num_scenarios) + " rows, has " +
                         std::to_string(base_.vocab_size()));
  }
}

std::size_t ScenarioKeyedTable::index(std::size_t entity, std::size_t scenario) const {
  if (entity >= num_entities_ || scenario >= num_scenarios_) {
    throw VocabularyError("(" + std::to_string(entity) + ", " + std::to_string(scenario) +
                          ") out of range for table '" + base_.name + "'");
  }
  return entity * num_scenarios_ + scenario;
}

ScenarioKeyedTable xavier_init_keyed(std::string name, std::size_t num_entities, std::size_t num_scenarios,
                                     std::size_t dim, num::Rng& rng) {
  return ScenarioKeyedTable(xavier_init(std::move(name), num_entities * num_scenarios, dim, rng), num_entities,
                            num_scenarios);
}

}  // namespace gsvr::emb
