#pragma once

#include "gsvr/embeddings/table.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace gsvr::emb {

// Binary little-endian checkpoint:
//   "GSVR" magic, u32 version, then per table until EOF:
//   u32 name length, name bytes, u64 vocab_size, u64 dim,
//   f64 weights (row-major), f64 adam_m, f64 adam_v, u64 step counts.
inline constexpr char kCheckpointMagic[4] = {'G', 'S', 'V', 'R'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const std::vector<const ParamTable*>& tables);
std::vector<ParamTable> read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const std::vector<const ParamTable*>& tables);
std::vector<ParamTable> load_checkpoint(const std::filesystem::path& path);

}  // namespace gsvr::emb
