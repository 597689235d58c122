#include "gsvr/model/quantize.hpp"

#include "gsvr/errors.hpp"
#include "gsvr/io/binary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace gsvr::model {

namespace {
constexpr char kMagic[4] = {'G', 'S', 'V', 'Q'};
constexpr std::uint32_t kVersion = 1;

int max_code(unsigned bits) { return (1 << (bits - 1)) - 1; }
}  // namespace

void check_bits(unsigned bits) {
  if (bits != 8 && bits != 16) throw ConfigError("quantization bits must be 8 or 16, got " + std::to_string(bits));
}

std::size_t QuantizedTable::storage_bytes() const { return vocab_size * (dim * (bits / 8) + sizeof(double)); }

QuantizedTable quantize(const emb::ParamTable& table, unsigned bits) {
  check_bits(bits);
  QuantizedTable q;
  q.name = table.name;
  q.vocab_size = table.vocab_size();
  q.dim = table.dim();
  q.bits = bits;
  q.scales.assign(q.vocab_size, 0.0);
  q.codes.assign(q.vocab_size * q.dim, 0);
  const int qmax = max_code(bits);
  for (std::size_t r = 0; r < q.vocab_size; ++r) {
    const double peak = table.weights.row(static_cast<Eigen::Index>(r)).cwiseAbs().maxCoeff();
    if (peak == 0.0) continue;
    const double scale = peak / qmax;
    q.scales[r] = scale;
    for (std::size_t c = 0; c < q.dim; ++c) {
      const double code = std::round(table.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) / scale);
      q.codes[r * q.dim + c] = static_cast<std::int16_t>(std::clamp(code, -double(qmax), double(qmax)));
    }
  }
  return q;
}

emb::ParamTable dequantize(const QuantizedTable& q) {
  emb::ParamTable t(q.name, q.vocab_size, q.dim);
  for (std::size_t r = 0; r < q.vocab_size; ++r) {
    for (std::size_t c = 0; c < q.dim; ++c) {
      t.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = q.scales[r] * q.codes[r * q.dim + c];
    }
  }
  return t;
}

double max_abs_error(const emb::ParamTable& table, const QuantizedTable& q) {
  return (table.weights - dequantize(q).weights).cwiseAbs().maxCoeff();
}

QuantizationResult quantize_scenario_embeddings(const std::vector<const emb::ParamTable*>& tables, unsigned bits) {
  check_bits(bits);
  QuantizationResult result;
  std::size_t quantized = 0;
  std::size_t baseline = 0;
  for (const emb::ParamTable* t : tables) {
    QuantizedTable q = quantize(*t, bits);
    quantized += q.storage_bytes();
    baseline += q.float32_bytes();
    if (t->vocab_size() > 0 && t->dim() > 0) result.max_abs_error = std::max(result.max_abs_error, max_abs_error(*t, q));
    result.tables.push_back(std::move(q));
  }
  result.memory_ratio = baseline == 0 ? 0.0 : static_cast<double>(quantized) / static_cast<double>(baseline);
  return result;
}

void write_quantized(std::ostream& out, const std::vector<QuantizedTable>& tables) {
  out.write(kMagic, 4);
  io::write_le<std::uint32_t>(out, kVersion);
  for (const auto& q : tables) {
    io::write_string(out, q.name);
    io::write_le<std::uint64_t>(out, q.vocab_size);
    io::write_le<std::uint64_t>(out, q.dim);
    io::write_le<std::uint32_t>(out, q.bits);
    for (double s : q.scales) io::write_le<double>(out, s);
    for (std::int16_t c : q.codes) {
      if (q.bits == 8) {
        io::write_le<std::int8_t>(out, static_cast<std::int8_t>(c));
      } else {
        io::write_le<std::int16_t>(out, c);
      }
    }
  }
  if (!out) throw IoError("quantized checkpoint write failed");
}

std::vector<QuantizedTable> read_quantized(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || !std::equal(magic, magic + 4, kMagic)) throw IoError("not a quantized GSVQ checkpoint");
  const auto version = io::read_le<std::uint32_t>(in);
  if (version != kVersion) throw IoError("unsupported quantized checkpoint version " + std::to_string(version));
  std::vector<QuantizedTable> tables;
  while (in.peek() != std::char_traits<char>::eof()) {
    QuantizedTable q;
    q.name = io::read_string(in);
    q.vocab_size = io::read_le<std::uint64_t>(in);
    q.dim = io::read_le<std::uint64_t>(in);
    q.bits = io::read_le<std::uint32_t>(in);
    if (q.bits != 8 && q.bits != 16) throw IoError("table '" + q.name + "' has unsupported width " + std::to_string(q.bits));
    q.scales.resize(q.vocab_size);
    for (auto& s : q.scales) s = io::read_le<double>(in);
    q.codes.resize(q.vocab_size * q.dim);
    for (auto& c : q.codes) c = q.bits == 8 ? io::read_le<std::int8_t>(in) : io::read_le<std::int16_t>(in);
    tables.push_back(std::move(q));
  }
  return tables;
}

void save_quantized(const std::filesystem::path& path, const std::vector<QuantizedTable>& tables) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_quantized(out, tables);
}

std::vector<QuantizedTable> load_quantized(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open quantized checkpoint: " + path.string());
  return read_quantized(in);
}

}  // namespace gsvr::model
