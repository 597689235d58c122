#include "gsvr/data/dataset.hpp"

#include "gsvr/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string_view>

namespace gsvr::data {

Vocabulary Vocabulary::identity(std::size_t n) {
  Vocabulary v;
  for (std::size_t i = 0; i < n; ++i) v.intern(i);
  return v;
}

std::uint32_t Vocabulary::intern(std::uint64_t raw) {
  auto [it, inserted] = index_.try_emplace(raw, static_cast<std::uint32_t>(raw_.size()));
  if (inserted) raw_.push_back(raw);
  return it->second;
}

std::optional<std::uint32_t> Vocabulary::find(std::uint64_t raw) const {
  auto it = index_.find(raw);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string to_string(Split split) {
  switch (split) {
    case Split::All: return "all";
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
  }
  return "all";
}

Split parse_split(const std::string& name) {
  if (name == "all") return Split::All;
  if (name == "train") return Split::Train;
  if (name == "valid") return Split::Valid;
  if (name == "test") return Split::Test;
  throw ConfigError("unknown split '" + name + "' (expected all, train, valid or test)");
}

std::vector<std::size_t> Dataset::side_vocab_sizes() const {
  std::vector<std::size_t> sizes;
  for (const auto& v : side) sizes.push_back(v.size());
  return sizes;
}

Split split_of(const Dataset& ds, const Interaction& x) {
  std::uint64_t state = (ds.users.raw(x.user) * 0x9e3779b97f4a7c15ULL) ^ x.session;
  const std::uint64_t h = num::splitmix64(state);
  const std::uint64_t bucket = h % 10;
  if (bucket < 8) return Split::Train;
  return bucket == 8 ? Split::Valid : Split::Test;
}

Dataset select_split(const Dataset& ds, Split split) {
  Dataset out;
  out.users = ds.users;
  out.items = ds.items;
  out.num_scenarios = ds.num_scenarios;
  out.side = ds.side;
  out.split = split;
  for (const auto& x : ds.interactions) {
    if (split == Split::All || split_of(ds, x) == split) out.interactions.push_back(x);
  }
  return out;
}

std::vector<std::size_t> scenario_counts(const Dataset& ds) {
  std::vector<std::size_t> counts(ds.num_scenarios, 0);
  for (const auto& x : ds.interactions) ++counts[x.scenario];
  return counts;
}

double label_rate(const Dataset& ds) {
  if (ds.empty()) return 0.0;
  std::size_t pos = 0;
  for (const auto& x : ds.interactions) pos += x.label;
  return static_cast<double>(pos) / static_cast<double>(ds.size());
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::uint64_t parse_id(std::string_view field, const char* what, std::size_t line) {
  std::uint64_t value = 0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw ParseError(std::string("field '") + what + "' is not a nonnegative integer: '" + std::string(field) + "'",
                     line);
  }
  return value;
}

std::vector<std::uint64_t> parse_list(std::string_view field, const char* what, std::size_t line) {
  std::vector<std::uint64_t> out;
  if (field.empty()) return out;
  for (auto part : split_fields(field, ',')) out.push_back(parse_id(part, what, line));
  return out;
}

}  // namespace

Dataset read_log(std::istream& in) {
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  std::uint64_t max_scenario = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_fields(line, '\t');
    if (fields.size() != 7) {
      throw ParseError("expected 7 tab-separated fields, found " + std::to_string(fields.size()), line_no);
    }
    Interaction x;
    x.user = ds.users.intern(parse_id(fields[0], "user_id", line_no));
    x.item = ds.items.intern(parse_id(fields[1], "item_id", line_no));
    const std::uint64_t scenario = parse_id(fields[2], "scenario_id", line_no);
    if (scenario > std::numeric_limits<std::uint32_t>::max()) throw ParseError("scenario_id too large", line_no);
    x.scenario = static_cast<std::uint32_t>(scenario);
    max_scenario = std::max(max_scenario, scenario);
    const std::uint64_t label = parse_id(fields[3], "label", line_no);
    if (label > 1) throw ParseError("label must be 0 or 1", line_no);
    x.label = static_cast<std::uint8_t>(label);
    x.session = parse_id(fields[4], "session_id", line_no);
    for (std::uint64_t b : parse_list(fields[5], "behaviors", line_no)) x.behaviors.push_back(ds.items.intern(b));
    const auto side = parse_list(fields[6], "side_features", line_no);
    if (first) {
      if (side.empty()) throw ParseError("side_features must have at least one slot", line_no);
      ds.side.resize(side.size());
      first = false;
    } else if (side.size() != ds.side.size()) {
      throw ParseError("expected " + std::to_string(ds.side.size()) + " side-feature slots, found " +
                           std::to_string(side.size()),
                       line_no);
    }
    for (std::size_t k = 0; k < side.size(); ++k) x.side_features.push_back(ds.side[k].intern(side[k]));
    ds.interactions.push_back(std::move(x));
  }
  ds.num_scenarios = ds.interactions.empty() ? 0 : static_cast<std::size_t>(max_scenario) + 1;
  return ds;
}

Dataset load_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open interaction log: " + path.string());
  return read_log(in);
}

void write_log(std::ostream& out, const Dataset& ds, const std::string& header) {
  if (!header.empty()) out << '#' << header << '\n';
  for (const auto& x : ds.interactions) {
    out << ds.users.raw(x.user) << '\t' << ds.items.raw(x.item) << '\t' << x.scenario << '\t'
        << static_cast<int>(x.label) << '\t' << x.session << '\t';
    for (std::size_t i = 0; i < x.behaviors.size(); ++i) {
      if (i) out << ',';
      out << ds.items.raw(x.behaviors[i]);
    }
    out << '\t';
    for (std::size_t k = 0; k < x.side_features.size(); ++k) {
      if (k) out << ',';
      out << ds.side[k].raw(x.side_features[k]);
    }
    out << '\n';
  }
}

void save_log(const std::filesystem::path& path, const Dataset& ds, const std::string& header) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_log(out, ds, header);
  if (!out) throw IoError("write failed: " + path.string());
}

void Batch::flatten_behaviors(std::vector<std::size_t>& ids, std::vector<std::size_t>& offsets) const {
  ids.clear();
  offsets.assign(1, 0);
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t k = 0; k < max_len; ++k) {
      const std::size_t b = behaviors[i * max_len + k];
      if (b != kPaddingId) ids.push_back(b);
    }
    offsets.push_back(ids.size());
  }
}

Batch make_batch(const Dataset& ds, std::span<const std::size_t> indices) {
  Batch b;
  const std::size_t n = indices.size();
  b.slots = ds.side_slots();
  for (std::size_t i : indices) b.max_len = std::max(b.max_len, ds.interactions[i].behaviors.size());
  b.users.reserve(n);
  b.items.reserve(n);
  b.scenarios.reserve(n);
  b.sessions.reserve(n);
  b.behaviors.assign(n * b.max_len, kPaddingId);
  b.side.reserve(n * b.slots);
  b.labels.resize(static_cast<Eigen::Index>(n), 1);
  for (std::size_t r = 0; r < n; ++r) {
    const Interaction& x = ds.interactions[indices[r]];
    b.users.push_back(x.user);
    b.items.push_back(x.item);
    b.scenarios.push_back(x.scenario);
    b.sessions.push_back(x.session);
    std::copy(x.behaviors.begin(), x.behaviors.end(), b.behaviors.begin() + static_cast<std::ptrdiff_t>(r * b.max_len));
    for (auto s : x.side_features) b.side.push_back(s);
    b.labels(static_cast<Eigen::Index>(r), 0) = x.label;
  }
  return b;
}

BatchStream::BatchStream(const Dataset& ds, std::size_t batch_size, num::Rng* shuffle)
    : ds_(&ds), batch_size_(batch_size), order_(ds.size()) {
  if (batch_size == 0) throw ContractError("batch size must be >= 1");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (shuffle) {
    for (std::size_t i = order_.size(); i > 1; --i) {
      std::swap(order_[i - 1], order_[shuffle->below(i)]);
    }
  }
}

bool BatchStream::next(Batch& out) {
  if (cursor_ >= order_.size()) return false;
  const std::size_t end = std::min(order_.size(), cursor_ + batch_size_);
  out = make_batch(*ds_, std::span<const std::size_t>(order_.data() + cursor_, end - cursor_));
  cursor_ = end;
  return true;
}

std::size_t BatchStream::num_batches() const { return (order_.size() + batch_size_ - 1) / batch_size_; }

}  // namespace gsvr::data
