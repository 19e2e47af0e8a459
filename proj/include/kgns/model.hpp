#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgns/data.hpp"

namespace kgns {

enum class ModelKind { kRescal, kDistMult, kComplEx, kTransE, kRotatE, kHake };

std::string_view to_string(ModelKind kind);
/// Accepts rescal, distmult, complex, transe, rotate, hake.
ModelKind parse_model_kind(std::string_view name);

/// Distance-based kinds score in (-inf, 0] (HAKE only while its phase weight is >= 0).
bool is_distance_based(ModelKind kind);

/// Default p of the distance norm: 1 for TransE and RotatE, 2 for the HAKE modulus part.
int default_p_norm(ModelKind kind);

/// Row widths of the entity and relation tables for a model of dimension d.
///   RESCAL    entity d,                 relation d*d (row-major M_r)
///   DistMult  entity d,                 relation d
///   ComplEx   entity 2d (re | im),      relation 2d (re | im)
///   TransE    entity d,                 relation d
///   RotatE    entity 2d (re | im),      relation d phase angles
///   HAKE      entity 2d (mod | phase),  relation 2d (mod | phase), plus scalar lambda
std::size_t entity_width(ModelKind kind, std::size_t dim);
std::size_t relation_width(ModelKind kind, std::size_t dim);

struct ModelParams {
  ModelKind kind = ModelKind::kTransE;
  std::size_t dim = 0;
  std::size_t num_entities = 0;
  std::size_t num_relations = 0;
  int p_norm = 1;
  std::vector<double> entities;
  std::vector<double> relations;
  double phase_weight = 0;  // HAKE lambda; unused otherwise

  std::size_t entity_stride() const { return entity_width(kind, dim); }
  std::size_t relation_stride() const { return relation_width(kind, dim); }

  std::span<double> entity(EntityId e) { return {entities.data() + e * entity_stride(), entity_stride()}; }
  std::span<const double> entity(EntityId e) const {
    return {entities.data() + e * entity_stride(), entity_stride()};
  }
  std::span<double> relation(RelationId r) {
    return {relations.data() + r * relation_stride(), relation_stride()};
  }
  std::span<const double> relation(RelationId r) const {
    return {relations.data() + r * relation_stride(), relation_stride()};
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct InitOptions {
  ModelKind kind = ModelKind::kTransE;
  std::size_t dim = 0;
  std::size_t num_entities = 0;
  std::size_t num_relations = 0;
  double margin = 0;  // gamma, sets the uniform init range (gamma + 2) / d
  std::uint64_t seed = 0;
  std::optional<int> p_norm;
};

/// Uniform init on [-(gamma+2)/d, (gamma+2)/d]; RotatE and HAKE phases on [0, 2pi);
/// HAKE lambda on [0, 0.01).
ModelParams init_params(const InitOptions& opts);

/// Which table a gradient row belongs to.
enum class Table : std::uint8_t { kEntity, kRelation, kScalar };

struct ParamSlot {
  Table table;
  std::uint32_t row;
  friend bool operator==(const ParamSlot&, const ParamSlot&) = default;
};

/// Sparse gradient: dense blocks for the rows that were touched, kept in
/// first-touch order so iteration is deterministic.
class GradientAccumulator {
 public:
  /// Returns the (zero-initialised on first touch) block for a slot.
  std::span<double> block(ParamSlot slot, std::size_t width);
  const std::vector<double>* find(ParamSlot slot) const;

  std::size_t size() const { return slots_.size(); }
  bool empty() const { return slots_.empty(); }
  const std::vector<ParamSlot>& slots() const { return slots_; }
  const std::vector<double>& values(std::size_t i) const { return blocks_[i]; }

  void merge(const GradientAccumulator& other, double scale = 1.0);
  void clear();

 private:
  static std::uint64_t key(ParamSlot s) {
    return (static_cast<std::uint64_t>(s.table) << 32) | s.row;
  }
  std::vector<ParamSlot> slots_;
  std::vector<std::vector<double>> blocks_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

using ScoreGradient = GradientAccumulator;

/// Score of candidate y for query x. For head-prediction queries y fills the head
/// role and the anchor the tail role.
double score(const ModelParams& params, const Query& x, EntityId y);
double score_triple(const ModelParams& params, const Triple& t);

/// Adds scale * d score / d params into `grad` and returns the score.
double accumulate_score_grad(const ModelParams& params, const Query& x, EntityId y, double scale,
                             GradientAccumulator& grad);

struct ScoreWithGradient {
  double score;
  ScoreGradient gradient;
};
ScoreWithGradient score_grad(const ModelParams& params, const Query& x, EntityId y);

/// Scores of every entity as the answer to x.
std::vector<double> score_all(const ModelParams& params, const Query& x);

}  // namespace kgns
