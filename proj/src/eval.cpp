#include "kgns/eval.hpp"

#include <cstdio>
#include <json.hpp>
#include <stdexcept>

namespace kgns {

std::size_t rank_from_scores(std::span<const double> scores, EntityId answer,
                             std::span<const EntityId> excluded) {
  if (answer >= scores.size()) throw std::out_of_range("answer id out of range");
  const double target = scores[answer];
  std::size_t greater = 0, equal = 0;
  for (std::size_t e = 0; e < scores.size(); ++e) {
    if (scores[e] > target) ++greater;
    else if (scores[e] == target && e != answer) ++equal;
  }
  for (EntityId e : excluded) {
    if (e == answer) continue;
    if (scores[e] > target) --greater;
    else if (scores[e] == target) --equal;
  }
  return 1 + greater + (equal + 1) / 2;
}

std::size_t rank_answer(const ModelParams& params, const Query& query, const FilterIndex& filter,
                        bool filtered) {
  const auto scores = score_all(params, query);
  if (!filtered) return rank_from_scores(scores, query.answer);
  return rank_from_scores(scores, query.answer,
                          filter.answers(query.direction, query.anchor, query.relation));
}

EvalReport summarize_ranks(std::vector<std::size_t> ranks) {
  EvalReport r;
  if (ranks.empty()) return r;
  for (auto k : ranks) {
    r.mrr += 1.0 / static_cast<double>(k);
    r.hits1 += k <= 1;
    r.hits3 += k <= 3;
    r.hits10 += k <= 10;
  }
  const double n = static_cast<double>(ranks.size());
  r.mrr /= n;
  r.hits1 /= n;
  r.hits3 /= n;
  r.hits10 /= n;
  r.ranks = std::move(ranks);
  return r;
}

EvalReport evaluate(const ModelParams& params, const QuerySet& queries, const FilterIndex& filter,
                    bool filtered) {
  if (queries.empty()) throw std::invalid_argument("cannot evaluate an empty query set");
  std::vector<std::size_t> ranks;
  ranks.reserve(queries.size());
  for (const auto& q : queries) ranks.push_back(rank_answer(params, q, filter, filtered));
  return summarize_ranks(std::move(ranks));
}

std::string report_json(const EvalReport& r) {
  return nlohmann::json{{"mrr", r.mrr},
                        {"hits1", r.hits1},
                        {"hits3", r.hits3},
                        {"hits10", r.hits10},
                        {"queries", r.ranks.size()}}
      .dump();
}

std::string report_tsv_header() { return "MRR\tHits@1\tHits@3\tHits@10"; }

std::string report_tsv_row(const EvalReport& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.1f\t%.1f\t%.1f\t%.1f", 100 * r.mrr, 100 * r.hits1, 100 * r.hits3,
                100 * r.hits10);
  return buf;
}

}  // namespace kgns
