#pragma once

#include "gsvr/numerics/rng.hpp"
#include "gsvr/numerics/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace gsvr::data {

// One impression. All ids are contiguous indices into the dataset vocabularies.
struct Interaction {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  std::uint32_t scenario = 0;
  std::vector<std::uint32_t> behaviors;      // item indices, most recent last
  std::vector<std::uint32_t> side_features;  // one index per slot
  std::uint8_t label = 0;
  std::uint64_t session = 0;
};

// Raw id <-> contiguous index mapping, assigned in first-seen order.
class Vocabulary {
 public:
  static Vocabulary identity(std::size_t n);

  std::uint32_t intern(std::uint64_t raw);
  std::optional<std::uint32_t> find(std::uint64_t raw) const;
  std::uint64_t raw(std::uint32_t index) const { return raw_[index]; }
  std::size_t size() const { return raw_.size(); }

 private:
  std::vector<std::uint64_t> raw_;
  std::unordered_map<std::uint64_t, std::uint32_t> index_;
};

enum class Split { All, Train, Valid, Test };

std::string to_string(Split split);
Split parse_split(const std::string& name);

struct Dataset {
  std::vector<Interaction> interactions;
  Vocabulary users;
  Vocabulary items;
  std::size_t num_scenarios = 0;
  std::vector<Vocabulary> side;  // one vocabulary per side-feature slot
  Split split = Split::All;

  std::size_t num_users() const { return users.size(); }
  std::size_t num_items() const { return items.size(); }
  std::size_t side_slots() const { return side.size(); }
  std::vector<std::size_t> side_vocab_sizes() const;
  std::size_t size() const { return interactions.size(); }
  bool empty() const { return interactions.empty(); }
};

// 8/1/1 split by hashing the raw (user, session) ids; whole sessions land in
// one split.
Split split_of(const Dataset& ds, const Interaction& x);
// Subset sharing the parent's vocabularies.
Dataset select_split(const Dataset& ds, Split split);

std::vector<std::size_t> scenario_counts(const Dataset& ds);
double label_rate(const Dataset& ds);

// Interaction log, one tab-separated record per line:
//   user  item  scenario  label  session  behaviors(a,b,..)  side(c0,c1,..)
// Lines starting with '#' are comments.
Dataset read_log(std::istream& in);
Dataset load_log(const std::filesystem::path& path);
void write_log(std::ostream& out, const Dataset& ds, const std::string& header = {});
void save_log(const std::filesystem::path& path, const Dataset& ds, const std::string& header = {});

inline constexpr std::size_t kPaddingId = std::numeric_limits<std::size_t>::max();

// Dense view of a group of interactions for one forward pass.
struct Batch {
  std::vector<std::size_t> users;
  std::vector<std::size_t> items;
  std::vector<std::size_t> scenarios;
  std::vector<std::uint64_t> sessions;
  // n × max_len, row-major, right-padded with kPaddingId.
  std::vector<std::size_t> behaviors;
  std::size_t max_len = 0;
  // n × slots, row-major.
  std::vector<std::size_t> side;
  std::size_t slots = 0;
  num::Tensor2 labels;  // n × 1

  std::size_t size() const { return users.size(); }
  // Offsets into the flattened non-padding behavior list, and that list.
  void flatten_behaviors(std::vector<std::size_t>& ids, std::vector<std::size_t>& offsets) const;
};

Batch make_batch(const Dataset& ds, std::span<const std::size_t> indices);

// Iterates a dataset in batches: shuffled when given an Rng, sequential
// otherwise. The final partial batch is included.
class BatchStream {
 public:
  BatchStream(const Dataset& ds, std::size_t batch_size, num::Rng* shuffle = nullptr);

  bool next(Batch& out);
  std::size_t num_batches() const;
  const std::vector<std::size_t>& order() const { return order_; }

 private:
  const Dataset* ds_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace gsvr::data
