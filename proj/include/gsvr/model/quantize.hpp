#pragma once

#include "gsvr/embeddings/table.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace gsvr::model {

// Per-row symmetric linear quantization: code = round(w / scale) with
// scale = max|w| / (2^(bits-1) - 1). Codes are stored widened to int16.
struct QuantizedTable {
  std::string name;
  std::size_t vocab_size = 0;
  std::size_t dim = 0;
  unsigned bits = 8;
  std::vector<double> scales;        // one per row
  std::vector<std::int16_t> codes;   // row-major

  // Bytes at the declared width plus one f64 scale per row.
  std::size_t storage_bytes() const;
  // The same table stored as float32.
  std::size_t float32_bytes() const { return vocab_size * dim * 4; }
};

void check_bits(unsigned bits);
QuantizedTable quantize(const emb::ParamTable& table, unsigned bits);
// Weights only; optimizer state is zero.
emb::ParamTable dequantize(const QuantizedTable& q);
double max_abs_error(const emb::ParamTable& table, const QuantizedTable& q);

struct QuantizationResult {
  std::vector<QuantizedTable> tables;
  double memory_ratio = 0.0;   // sum of storage_bytes / sum of float32_bytes
  double max_abs_error = 0.0;
};

QuantizationResult quantize_scenario_embeddings(const std::vector<const emb::ParamTable*>& tables, unsigned bits = 8);

// "GSVQ" magic, u32 version, then per table: u32 name length, name bytes,
// u64 vocab_size, u64 dim, u32 bits, f64 scales, codes at 1 or 2 bytes each.
void write_quantized(std::ostream& out, const std::vector<QuantizedTable>& tables);
std::vector<QuantizedTable> read_quantized(std::istream& in);
void save_quantized(const std::filesystem::path& path, const std::vector<QuantizedTable>& tables);
std::vector<QuantizedTable> load_quantized(const std::filesystem::path& path);

}  // namespace gsvr::model
