#pragma once

#include <span>
#include <string>
#include <vector>

#include "kgns/data.hpp"
#include "kgns/model.hpp"

namespace kgns {

struct EvalReport {
  double mrr = 0;
  double hits1 = 0;
  double hits3 = 0;
  double hits10 = 0;
  std::vector<std::size_t> ranks;
};

/// Rank of `answer` by descending score among the candidates not listed in
/// `excluded` (the answer itself is never excluded). Ties count half:
/// rank = 1 + #greater + ceil(#equal_others / 2).
std::size_t rank_from_scores(std::span<const double> scores, EntityId answer,
                             std::span<const EntityId> excluded = {});

/// Filtered rank: other known answers for the query are removed before ranking.
/// With `filtered` false the raw rank is returned.
std::size_t rank_answer(const ModelParams& params, const Query& query, const FilterIndex& filter,
                        bool filtered = true);

EvalReport summarize_ranks(std::vector<std::size_t> ranks);

EvalReport evaluate(const ModelParams& params, const QuerySet& queries, const FilterIndex& filter,
                    bool filtered = true);

/// {"mrr":..,"hits1":..,"hits3":..,"hits10":..,"queries":..}
std::string report_json(const EvalReport& r);
/// "MRR\tHits@1\tHits@3\tHits@10" values scaled by 100, one decimal.
std::string report_tsv_header();
std::string report_tsv_row(const EvalReport& r);

}  // namespace kgns
