#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kgns {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

using TripleSet = std::vector<Triple>;

/// kTail predicts the tail of (e_i, r_k, ?); kHead predicts the head of (?, r_k, e_j).
enum class Direction : std::uint8_t { kTail = 0, kHead = 1 };

std::string_view to_string(Direction d);

struct Query {
  Direction direction = Direction::kTail;
  EntityId anchor = 0;
  RelationId relation = 0;
  EntityId answer = 0;

  Triple triple() const {
    return direction == Direction::kTail ? Triple{anchor, relation, answer}
                                         : Triple{answer, relation, anchor};
  }
  friend bool operator==(const Query&, const Query&) = default;
};

using QuerySet = std::vector<Query>;

/// Symbols indexed in first-appearance order.
class SymbolTable {
 public:
  std::uint32_t add(std::string_view name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

struct Vocab {
  SymbolTable entities;
  SymbolTable relations;

  std::size_t num_entities() const { return entities.size(); }
  std::size_t num_relations() const { return relations.size(); }

  /// Throws VocabError on unknown symbols.
  Triple encode(std::string_view head, std::string_view relation, std::string_view tail) const;
  std::array<std::string, 3> decode(const Triple& t) const;
};

struct LoadedTriples {
  TripleSet triples;
  Vocab vocab;
};

/// Reads `head<TAB>relation<TAB>tail` lines. With `fixed` set, symbols must already
/// exist in it; otherwise the vocabulary is built from the input. Duplicate triples
/// are rejected.
LoadedTriples load_triples(const std::filesystem::path& path, const Vocab* fixed = nullptr);
LoadedTriples parse_triples(std::istream& in, std::string_view source, const Vocab* fixed = nullptr);

struct Dataset {
  Vocab vocab;
  TripleSet train;
  TripleSet valid;
  TripleSet test;

  const TripleSet& split(std::string_view name) const;
};

/// Loads train.txt, valid.txt and test.txt from `dir`. Vocabulary order is first
/// appearance in train, then valid, then test. A missing valid.txt or test.txt is
/// treated as an empty split.
Dataset load_dataset(const std::filesystem::path& dir);

/// Multiplicity counts #(e_i, r_k) and #(r_k, e_j) over the training split.
class FrequencyTable {
 public:
  std::uint32_t head_rel(EntityId head, RelationId rel) const;
  std::uint32_t rel_tail(RelationId rel, EntityId tail) const;

  /// Backoff estimate #(x, y) ~ #(e_i, r_k) + #(r_k, e_j); same value for both directions.
  std::uint32_t pair_frequency(const Triple& t) const {
    return head_rel(t.head, t.relation) + rel_tail(t.relation, t.tail);
  }

  /// #x: the count of the query side of the triple.
  std::uint32_t query_frequency(const Query& q) const {
    return q.direction == Direction::kTail ? head_rel(q.anchor, q.relation)
                                           : rel_tail(q.relation, q.anchor);
  }

  std::size_t num_triples() const { return num_triples_; }
  const std::unordered_map<std::uint64_t, std::uint32_t>& head_rel_counts() const { return head_rel_; }
  const std::unordered_map<std::uint64_t, std::uint32_t>& rel_tail_counts() const { return rel_tail_; }

 private:
  friend FrequencyTable count_frequencies(const TripleSet& train);

  std::unordered_map<std::uint64_t, std::uint32_t> head_rel_;
  std::unordered_map<std::uint64_t, std::uint32_t> rel_tail_;
  std::size_t num_triples_ = 0;
};

FrequencyTable count_frequencies(const TripleSet& train);

/// Two queries per triple, in triple order, tail-prediction first.
QuerySet make_queries(const TripleSet& triples);

/// Known answers per (direction, anchor, relation) across all splits.
class FilterIndex {
 public:
  void add(const Triple& t);
  /// Sorted answer ids; empty when the key was never seen.
  const std::vector<EntityId>& answers(Direction d, EntityId anchor, RelationId rel) const;
  bool contains(const Query& q) const;

 private:
  static std::uint64_t key(Direction d, EntityId anchor, RelationId rel);
  std::unordered_map<std::uint64_t, std::vector<EntityId>> answers_;
};

FilterIndex build_filter_index(const TripleSet& train, const TripleSet& valid, const TripleSet& test);

}  // namespace kgns
