#include "kgns/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "kgns/errors.hpp"

namespace kgns {
namespace {

void append_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xff));
    bits >>= 8;
  }
}

double read_le(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<double>(bits);
}

std::size_t value_count(const ModelParams& p) {
  return p.entities.size() + p.relations.size() + (p.kind == ModelKind::kHake ? 1 : 0);
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, std::uint64_t seed) {
  nlohmann::json header = {
      {"format", "kgns-checkpoint"},
      {"version", 1},
      {"model", std::string(to_string(params.kind))},
      {"dim", params.dim},
      {"num_entities", params.num_entities},
      {"num_relations", params.num_relations},
      {"seed", seed},
      {"p_norm", params.p_norm},
      {"num_values", value_count(params)},
  };
  std::string bytes = header.dump();
  bytes.push_back('\n');
  bytes.reserve(bytes.size() + 8 * value_count(params));
  for (double v : params.entities) append_le(bytes, v);
  for (double v : params.relations) append_le(bytes, v);
  if (params.kind == ModelKind::kHake) append_le(bytes, params.phase_weight);
  write_file_atomic(path, bytes);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty checkpoint " + path.string());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad checkpoint header in " + path.string() + ": " + e.what());
  }
  if (header.value("format", "") != "kgns-checkpoint") {
    throw DataError(path.string() + " is not a kgns checkpoint");
  }

  Checkpoint ck;
  try {
    ck.header.kind = parse_model_kind(header.at("model").get<std::string>());
    ck.header.dim = header.at("dim").get<std::size_t>();
    ck.header.num_entities = header.at("num_entities").get<std::size_t>();
    ck.header.num_relations = header.at("num_relations").get<std::size_t>();
    ck.header.seed = header.at("seed").get<std::uint64_t>();
    ck.header.p_norm = header.at("p_norm").get<int>();
  } catch (const std::exception& e) {
    throw DataError("bad checkpoint header in " + path.string() + ": " + e.what());
  }

  auto& p = ck.params;
  p.kind = ck.header.kind;
  p.dim = ck.header.dim;
  p.num_entities = ck.header.num_entities;
  p.num_relations = ck.header.num_relations;
  p.p_norm = ck.header.p_norm;
  p.entities.resize(p.num_entities * p.entity_stride());
  p.relations.resize(p.num_relations * p.relation_stride());

  const std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t expected = value_count(p);
  if (body.size() != 8 * expected) {
    throw DataError("checkpoint " + path.string() + " has " + std::to_string(body.size()) +
                    " payload bytes, expected " + std::to_string(8 * expected));
  }
  const char* cursor = body.data();
  for (double& v : p.entities) { v = read_le(cursor); cursor += 8; }
  for (double& v : p.relations) { v = read_le(cursor); cursor += 8; }
  if (p.kind == ModelKind::kHake) p.phase_weight = read_le(cursor);
  return ck;
}

}  // namespace kgns
