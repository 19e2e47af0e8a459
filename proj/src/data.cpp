#include "kgns/data.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <set>

#include "kgns/errors.hpp"

namespace kgns {
namespace {

std::uint64_t pack(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

// Grows `vocab` when `grow` is set, otherwise every symbol must already be known.
TripleSet parse_into(std::istream& in, std::string_view source, Vocab& vocab, bool grow) {
  TripleSet triples;
  std::set<Triple> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::array<std::string_view, 3> fields;
    std::string_view rest(line);
    std::size_t count = 0;
    while (true) {
      const auto tab = rest.find('\t');
      if (count < 3) fields[count] = rest.substr(0, tab);
      ++count;
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    if (count != 3) {
      throw ParseError(std::string(source), lineno,
                       "expected 3 tab-separated fields, got " + std::to_string(count));
    }
    for (const auto& f : fields) {
      if (f.empty()) throw ParseError(std::string(source), lineno, "empty field");
    }

    Triple t;
    if (grow) {
      t = Triple{vocab.entities.add(fields[0]), vocab.relations.add(fields[1]),
                 vocab.entities.add(fields[2])};
    } else {
      try {
        t = vocab.encode(fields[0], fields[1], fields[2]);
      } catch (const VocabError& e) {
        throw VocabError(std::string(source) + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
    if (!seen.insert(t).second) {
      throw ParseError(std::string(source), lineno, "duplicate triple");
    }
    triples.push_back(t);
  }
  return triples;
}

void register_symbols(std::istream& in, Vocab& vocab) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto a = line.find('\t');
    if (a == std::string::npos) continue;
    const auto b = line.find('\t', a + 1);
    if (b == std::string::npos || line.find('\t', b + 1) != std::string::npos) continue;
    // Malformed lines are reported by the strict pass that follows.
    if (a == 0 || b == a + 1 || b + 1 == line.size()) continue;
    vocab.entities.add(std::string_view(line).substr(0, a));
    vocab.relations.add(std::string_view(line).substr(a + 1, b - a - 1));
    vocab.entities.add(std::string_view(line).substr(b + 1));
  }
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace

std::string_view to_string(Direction d) {
  return d == Direction::kTail ? "tail" : "head";
}

std::uint32_t SymbolTable::add(std::string_view name) {
  auto it = ids_.find(std::string(name));
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<std::uint32_t> SymbolTable::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

Triple Vocab::encode(std::string_view head, std::string_view relation, std::string_view tail) const {
  const auto h = entities.find(head);
  if (!h) throw VocabError("unknown entity '" + std::string(head) + "'");
  const auto r = relations.find(relation);
  if (!r) throw VocabError("unknown relation '" + std::string(relation) + "'");
  const auto t = entities.find(tail);
  if (!t) throw VocabError("unknown entity '" + std::string(tail) + "'");
  return {*h, *r, *t};
}

std::array<std::string, 3> Vocab::decode(const Triple& t) const {
  return {entities.name(t.head), relations.name(t.relation), entities.name(t.tail)};
}

LoadedTriples parse_triples(std::istream& in, std::string_view source, const Vocab* fixed) {
  LoadedTriples out;
  if (fixed) out.vocab = *fixed;
  out.triples = parse_into(in, source, out.vocab, fixed == nullptr);
  return out;
}

LoadedTriples load_triples(const std::filesystem::path& path, const Vocab* fixed) {
  auto in = open_or_throw(path);
  return parse_triples(in, path.string(), fixed);
}

const TripleSet& Dataset::split(std::string_view name) const {
  if (name == "train") return train;
  if (name == "valid") return valid;
  if (name == "test") return test;
  throw ConfigError("unknown split '" + std::string(name) + "'");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  const auto train_path = dir / "train.txt";
  {
    auto in = open_or_throw(train_path);
    ds.train = parse_into(in, train_path.string(), ds.vocab, true);
  }
  std::vector<std::filesystem::path> others;
  for (const char* name : {"valid.txt", "test.txt"}) {
    const auto path = dir / name;
    if (std::filesystem::exists(path)) {
      auto in = open_or_throw(path);
      register_symbols(in, ds.vocab);
    }
    others.push_back(path);
  }
  for (std::size_t i = 0; i < others.size(); ++i) {
    TripleSet& target = i == 0 ? ds.valid : ds.test;
    if (!std::filesystem::exists(others[i])) continue;
    auto in = open_or_throw(others[i]);
    target = parse_into(in, others[i].string(), ds.vocab, false);
  }
  return ds;
}

std::uint32_t FrequencyTable::head_rel(EntityId head, RelationId rel) const {
  auto it = head_rel_.find(pack(head, rel));
  return it == head_rel_.end() ? 0 : it->second;
}

std::uint32_t FrequencyTable::rel_tail(RelationId rel, EntityId tail) const {
  auto it = rel_tail_.find(pack(rel, tail));
  return it == rel_tail_.end() ? 0 : it->second;
}

FrequencyTable count_frequencies(const TripleSet& train) {
  if (train.empty()) throw DataError("cannot count frequencies of an empty training split");
  FrequencyTable table;
  for (const auto& t : train) {
    ++table.head_rel_[pack(t.head, t.relation)];
    ++table.rel_tail_[pack(t.relation, t.tail)];
  }
  table.num_triples_ = train.size();
  return table;
}

QuerySet make_queries(const TripleSet& triples) {
  QuerySet queries;
  queries.reserve(2 * triples.size());
  for (const auto& t : triples) {
    queries.push_back({Direction::kTail, t.head, t.relation, t.tail});
    queries.push_back({Direction::kHead, t.tail, t.relation, t.head});
  }
  return queries;
}

std::uint64_t FilterIndex::key(Direction d, EntityId anchor, RelationId rel) {
  return (static_cast<std::uint64_t>(anchor) << 32) | (static_cast<std::uint64_t>(rel) << 1) |
         static_cast<std::uint64_t>(d);
}

void FilterIndex::add(const Triple& t) {
  for (const auto& q : make_queries({t})) {
    auto& v = answers_[key(q.direction, q.anchor, q.relation)];
    auto pos = std::lower_bound(v.begin(), v.end(), q.answer);
    if (pos == v.end() || *pos != q.answer) v.insert(pos, q.answer);
  }
}

const std::vector<EntityId>& FilterIndex::answers(Direction d, EntityId anchor, RelationId rel) const {
  static const std::vector<EntityId> kEmpty;
  auto it = answers_.find(key(d, anchor, rel));
  return it == answers_.end() ? kEmpty : it->second;
}

bool FilterIndex::contains(const Query& q) const {
  const auto& v = answers(q.direction, q.anchor, q.relation);
  return std::binary_search(v.begin(), v.end(), q.answer);
}

FilterIndex build_filter_index(const TripleSet& train, const TripleSet& valid, const TripleSet& test) {
  FilterIndex index;
  for (const auto* split : {&train, &valid, &test}) {
    for (const auto& t : *split) index.add(t);
  }
  return index;
}

}  // namespace kgns
