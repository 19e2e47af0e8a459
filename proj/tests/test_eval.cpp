#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "kgns/eval.hpp"
#include "test_util.hpp"

using namespace kgns;

TEST(Rank, UniqueMaximumIsFirst) {
  const double s[] = {0.1, 0.9, 0.3};
  EXPECT_EQ(rank_from_scores(s, 1), 1u);
}

TEST(Rank, ThirdOfFive) {
  const double s[] = {5, 1, 3, 4, 2};
  EXPECT_EQ(rank_from_scores(s, 2), 3u);
}

TEST(Rank, AllTiedRoundsHalfUp) {
  for (std::size_t n : {1, 2, 3, 4, 7, 10}) {
    std::vector<double> s(n, 0.5);
    EXPECT_EQ(rank_from_scores(s, 0), (n + 2) / 2) << n;  // round_half_up((1 + n) / 2)
  }
}

TEST(Rank, FilteringRemovesOtherKnownAnswers) {
  const double s[] = {5, 1, 3, 4, 2};
  const EntityId excluded[] = {0, 2, 3};  // the answer's own id is ignored
  EXPECT_EQ(rank_from_scores(s, 2, excluded), 1u);
  const EntityId tied_excluded[] = {1};
  const double t[] = {1, 1, 1};
  EXPECT_EQ(rank_from_scores(t, 0, tied_excluded), 2u);
}

TEST(Summary, HandArithmetic) {
  const auto r = summarize_ranks({1, 4});
  EXPECT_DOUBLE_EQ(r.mrr, 0.625);
  EXPECT_DOUBLE_EQ(r.hits1, 0.5);
  EXPECT_DOUBLE_EQ(r.hits3, 0.5);
  EXPECT_DOUBLE_EQ(r.hits10, 1.0);
  const auto ones = summarize_ranks({1, 1, 1});
  EXPECT_EQ(ones.mrr, 1.0);
  EXPECT_EQ(ones.hits10, 1.0);
}

TEST(Evaluate, EmptyQuerySetRejected) {
  const auto p = init_params({.kind = ModelKind::kTransE, .dim = 2, .num_entities = 3, .num_relations = 1});
  EXPECT_THROW(evaluate(p, {}, FilterIndex{}), std::invalid_argument);
}

TEST(Evaluate, ToyKgMatchesBruteForceSort) {
  test::TempDir dir;
  test::write_random_kg(dir.path(), 5, 2, 6, 2, 2, 8);
  const auto ds = load_dataset(dir.path());
  const auto filter = build_filter_index(ds.train, ds.valid, ds.test);
  const auto params = init_params({.kind = ModelKind::kDistMult, .dim = 4, .num_entities = ds.vocab.num_entities(),
                                   .num_relations = ds.vocab.num_relations(), .margin = 1, .seed = 2});
  const auto queries = make_queries(ds.test);
  const auto report = evaluate(params, queries, filter);
  double mrr = 0;
  for (const auto& q : queries) {
    std::vector<std::pair<double, EntityId>> cands;
    for (EntityId e = 0; e < ds.vocab.num_entities(); ++e) {
      const auto& known = filter.answers(q.direction, q.anchor, q.relation);
      if (e != q.answer && std::find(known.begin(), known.end(), e) != known.end()) continue;
      cands.emplace_back(score(params, q, e), e);
    }
    std::sort(cands.begin(), cands.end(), std::greater<>());
    const auto pos = std::find_if(cands.begin(), cands.end(), [&](const auto& c) { return c.second == q.answer; });
    mrr += 1.0 / static_cast<double>(pos - cands.begin() + 1);  // scores are distinct here
  }
  EXPECT_DOUBLE_EQ(report.mrr, mrr / static_cast<double>(queries.size()));
}

TEST(Evaluate, MonotoneTransformLeavesRanksUnchanged) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s(12);
    for (auto& v : s) v = std::round(u(rng) * 2) / 2;  // force ties
    std::vector<double> t(s.size());
    std::transform(s.begin(), s.end(), t.begin(), [](double v) { return std::exp(v) * 3 + 1; });
    const EntityId answer = trial % 12;
    const EntityId ex[] = {static_cast<EntityId>((trial + 1) % 12), static_cast<EntityId>((trial + 5) % 12)};
    EXPECT_EQ(rank_from_scores(s, answer, ex), rank_from_scores(t, answer, ex));
    EXPECT_LE(rank_from_scores(s, answer, ex), rank_from_scores(s, answer));
  }
}

TEST(Evaluate, MetricOrderingInvariants) {
  test::TempDir dir;
  test::write_random_kg(dir.path(), 40, 3, 150, 30, 30, 21);
  const auto ds = load_dataset(dir.path());
  const auto filter = build_filter_index(ds.train, ds.valid, ds.test);
  const auto params = init_params({.kind = ModelKind::kRotatE, .dim = 6, .num_entities = ds.vocab.num_entities(),
                                   .num_relations = ds.vocab.num_relations(), .margin = 2, .seed = 8});
  auto queries = make_queries(ds.test);
  const auto r = evaluate(params, queries, filter);
  EXPECT_LE(r.hits1, r.hits3);
  EXPECT_LE(r.hits3, r.hits10);
  EXPECT_GE(r.mrr, r.hits1);
  std::reverse(queries.begin(), queries.end());
  EXPECT_DOUBLE_EQ(evaluate(params, queries, filter).mrr, r.mrr);
  const auto raw = evaluate(params, queries, filter, false);
  EXPECT_LE(raw.mrr, r.mrr);
}

TEST(Report, JsonAndTsv) {
  const auto r = summarize_ranks({1, 4});
  EXPECT_EQ(report_json(r), R"({"hits1":0.5,"hits10":1.0,"hits3":0.5,"mrr":0.625,"queries":2})");
  EXPECT_EQ(report_tsv_header(), "MRR\tHits@1\tHits@3\tHits@10");
  EXPECT_EQ(report_tsv_row(r), "62.5\t50.0\t50.0\t100.0");
}
