#pragma once

#include <cstdint>
#include <filesystem>

#include "kgns/model.hpp"

namespace kgns {

struct CheckpointHeader {
  ModelKind kind = ModelKind::kTransE;
  std::size_t dim = 0;
  std::size_t num_entities = 0;
  std::size_t num_relations = 0;
  std::uint64_t seed = 0;
  int p_norm = 1;
};

// Layout: one line of JSON (the header, '\n'-terminated) followed by the entity
// table, the relation table and, for HAKE, the phase weight, all as 64-bit
// little-endian IEEE doubles.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, std::uint64_t seed);

struct Checkpoint {
  CheckpointHeader header;
  ModelParams params;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Writes `bytes` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace kgns
