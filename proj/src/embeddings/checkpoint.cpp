#include "gsvr/embeddings/checkpoint.hpp"

#include "gsvr/errors.hpp"
#include "gsvr/io/binary.hpp"

#include <fstream>

namespace gsvr::emb {

namespace {

void write_matrix(std::ostream& out, const Tensor2& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) io::write_le<double>(out, m.data()[i]);
}

void read_matrix(std::istream& in, Tensor2& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = io::read_le<double>(in);
}

}  // namespace

void write_checkpoint(std::ostream& out, const std::vector<const ParamTable*>& tables) {
  out.write(kCheckpointMagic, 4);
  io::write_le<std::uint32_t>(out, kCheckpointVersion);
  for (const ParamTable* t : tables) {
    io::write_string(out, t->name);
    io::write_le<std::uint64_t>(out, t->vocab_size());
    io::write_le<std::uint64_t>(out, t->dim());
    write_matrix(out, t->weights);
    write_matrix(out, t->adam_m);
    write_matrix(out, t->adam_v);
    for (std::uint64_t s : t->step_counts) io::write_le<std::uint64_t>(out, s);
  }
  if (!out) throw IoError("checkpoint write failed");
}

std::vector<ParamTable> read_checkpoint(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || !std::equal(magic, magic + 4, kCheckpointMagic)) throw IoError("not a GSVR checkpoint");
  const auto version = io::read_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));

  std::vector<ParamTable> tables;
  while (in.peek() != std::char_traits<char>::eof()) {
    std::string name = io::read_string(in);
    const auto vocab = io::read_le<std::uint64_t>(in);
    const auto dim = io::read_le<std::uint64_t>(in);
    ParamTable t(std::move(name), vocab, dim);
    read_matrix(in, t.weights);
    read_matrix(in, t.adam_m);
    read_matrix(in, t.adam_v);
    for (auto& s : t.step_counts) s = io::read_le<std::uint64_t>(in);
    tables.push_back(std::move(t));
  }
  return tables;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<const ParamTable*>& tables) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  write_checkpoint(out, tables);
}

std::vector<ParamTable> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  return read_checkpoint(in);
}

}  // namespace gsvr::emb
