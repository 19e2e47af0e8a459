#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "kgns/checkpoint.hpp"
#include "kgns/errors.hpp"
#include "kgns/model.hpp"
#include "test_util.hpp"

using namespace kgns;

namespace {

constexpr ModelKind kAllKinds[] = {ModelKind::kRescal, ModelKind::kDistMult, ModelKind::kComplEx,
                                   ModelKind::kTransE, ModelKind::kRotatE,   ModelKind::kHake};

ModelParams random_params(ModelKind kind, std::size_t dim, std::uint64_t seed, int p_norm = 0) {
  InitOptions opts{.kind = kind, .dim = dim, .num_entities = 6, .num_relations = 3, .margin = 1.0, .seed = seed};
  if (p_norm) opts.p_norm = p_norm;
  auto params = init_params(opts);
  std::mt19937_64 rng(seed ^ 0x5eed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : params.entities) v = u(rng);
  for (auto& v : params.relations) v = u(rng);
  if (kind == ModelKind::kHake) params.phase_weight = 0.5 + 0.5 * u(rng);
  return params;
}

ModelParams zeroed(ModelKind kind, std::size_t dim, std::size_t entities = 3, std::size_t relations = 1) {
  auto p = init_params({.kind = kind, .dim = dim, .num_entities = entities, .num_relations = relations});
  std::fill(p.entities.begin(), p.entities.end(), 0.0);
  std::fill(p.relations.begin(), p.relations.end(), 0.0);
  p.phase_weight = 0;
  return p;
}

double& param_at(ModelParams& p, ParamSlot slot, std::size_t k) {
  switch (slot.table) {
    case Table::kEntity: return p.entity(slot.row)[k];
    case Table::kRelation: return p.relation(slot.row)[k];
    case Table::kScalar: break;
  }
  return p.phase_weight;
}

double relative_error(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3}); }

}  // namespace

TEST(Scoring, RowWidths) {
  EXPECT_EQ(entity_width(ModelKind::kRescal, 4), 4u);
  EXPECT_EQ(relation_width(ModelKind::kRescal, 4), 16u);
  EXPECT_EQ(entity_width(ModelKind::kComplEx, 4), 8u);
  EXPECT_EQ(relation_width(ModelKind::kComplEx, 4), 8u);
  EXPECT_EQ(entity_width(ModelKind::kRotatE, 4), 8u);
  EXPECT_EQ(relation_width(ModelKind::kRotatE, 4), 4u);
  EXPECT_EQ(entity_width(ModelKind::kHake, 4), 8u);
  EXPECT_EQ(relation_width(ModelKind::kHake, 4), 8u);
  EXPECT_EQ(relation_width(ModelKind::kTransE, 4), 4u);
}

TEST(Scoring, ModelNamesRoundTrip) {
  for (auto k : kAllKinds) EXPECT_EQ(parse_model_kind(to_string(k)), k);
  EXPECT_THROW(parse_model_kind("conve"), ConfigError);
}

TEST(Scoring, TransEExactTranslationScoresZero) {
  auto p = zeroed(ModelKind::kTransE, 3);
  const double h[] = {0.3, -1.0, 2.0}, r[] = {0.5, 0.25, -1.0};
  for (int i = 0; i < 3; ++i) {
    p.entity(0)[i] = h[i];
    p.relation(0)[i] = r[i];
    p.entity(1)[i] = h[i] + r[i];
  }
  EXPECT_DOUBLE_EQ(score_triple(p, {0, 0, 1}), 0.0);
  EXPECT_DOUBLE_EQ(score_triple(p, {0, 0, 2}), -(0.8 + 0.75 + 1.0));
}

TEST(Scoring, DistMultAllOnes) {
  auto p = zeroed(ModelKind::kDistMult, 4);
  std::fill(p.entities.begin(), p.entities.end(), 1.0);
  std::fill(p.relations.begin(), p.relations.end(), 1.0);
  EXPECT_DOUBLE_EQ(score_triple(p, {0, 0, 1}), 4.0);
}

TEST(Scoring, RotatEHalfTurn) {
  auto p = zeroed(ModelKind::kRotatE, 1);
  p.entity(0)[0] = 1.0;
  p.relation(0)[0] = std::numbers::pi;
  p.entity(1)[0] = -1.0;
  EXPECT_NEAR(score_triple(p, {0, 0, 1}), 0.0, 1e-15);
}

TEST(Scoring, RescalBilinearForm) {
  auto p = zeroed(ModelKind::kRescal, 2);
  p.entity(0)[0] = 1;
  p.entity(0)[1] = 2;
  p.entity(1)[0] = 3;
  p.entity(1)[1] = 4;
  const double m[] = {1, 2, 3, 4};  // row-major
  std::copy(std::begin(m), std::end(m), p.relation(0).begin());
  // h^T M t = [1 2] [[1 2][3 4]] [3 4]^T = [7 10] . [3 4] = 61
  EXPECT_DOUBLE_EQ(score_triple(p, {0, 0, 1}), 61.0);
}

TEST(Scoring, ComplExMatchesDistMultOnRealInputs) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto dm = random_params(ModelKind::kDistMult, 5, seed);
    auto cx = zeroed(ModelKind::kComplEx, 5, dm.num_entities, dm.num_relations);
    for (EntityId e = 0; e < dm.num_entities; ++e) std::copy_n(dm.entity(e).begin(), 5, cx.entity(e).begin());
    for (RelationId r = 0; r < dm.num_relations; ++r) std::copy_n(dm.relation(r).begin(), 5, cx.relation(r).begin());
    for (EntityId h = 0; h < 6; ++h) {
      EXPECT_NEAR(score_triple(cx, {h, 1, (h + 2) % 6}), score_triple(dm, {h, 1, (h + 2) % 6}), 1e-12);
    }
  }
}

TEST(Scoring, HakeWithZeroLambdaIsModulusTerm) {
  auto p = random_params(ModelKind::kHake, 4, 3);
  const double with_phase = score_triple(p, {0, 1, 2});
  p.phase_weight = 0;
  double sq = 0;
  for (int i = 0; i < 4; ++i) {
    const double res = p.entity(0)[i] * std::abs(p.relation(1)[i]) - p.entity(2)[i];
    sq += res * res;
  }
  EXPECT_NEAR(score_triple(p, {0, 1, 2}), -std::sqrt(sq), 1e-12);
  EXPECT_LT(with_phase, score_triple(p, {0, 1, 2}));
}

TEST(Scoring, HakePhaseTermBounded) {
  auto p = random_params(ModelKind::kHake, 4, 9);
  for (EntityId t = 0; t < 6; ++t) {
    const double full = score_triple(p, {0, 2, t});
    const double lambda = p.phase_weight;
    p.phase_weight = 0;
    const double modulus = score_triple(p, {0, 2, t});
    p.phase_weight = lambda;
    EXPECT_LE(full - modulus, 0.0);
    EXPECT_GE(full - modulus, -lambda * 4 - 1e-12);
  }
}

TEST(Scoring, DistanceModelsAreNonPositive) {
  for (auto kind : {ModelKind::kTransE, ModelKind::kRotatE, ModelKind::kHake}) {
    for (int p_norm : {1, 2}) {
      const auto p = random_params(kind, 6, 17, p_norm);
      for (EntityId h = 0; h < 6; ++h) {
        for (EntityId t = 0; t < 6; ++t) EXPECT_LE(score_triple(p, {h, 0, t}), 0.0);
      }
    }
  }
}

TEST(Scoring, DistanceModelsInvariantUnderCoordinatePermutation) {
  for (auto kind : {ModelKind::kTransE, ModelKind::kRotatE}) {
    const auto p = random_params(kind, 5, 23);
    auto q = p;
    const std::size_t perm[] = {3, 0, 4, 1, 2};
    const bool complex = kind == ModelKind::kRotatE;
    for (EntityId e = 0; e < p.num_entities; ++e) {
      for (std::size_t i = 0; i < 5; ++i) {
        q.entity(e)[i] = p.entity(e)[perm[i]];
        if (complex) q.entity(e)[5 + i] = p.entity(e)[5 + perm[i]];
      }
    }
    for (RelationId r = 0; r < p.num_relations; ++r) {
      for (std::size_t i = 0; i < 5; ++i) q.relation(r)[i] = p.relation(r)[perm[i]];
    }
    for (EntityId h = 0; h < 6; ++h) EXPECT_NEAR(score_triple(p, {h, 2, 5 - h}), score_triple(q, {h, 2, 5 - h}), 1e-12);
  }
}

TEST(Scoring, HeadQueryPutsCandidateInHeadRole) {
  for (auto kind : kAllKinds) {
    const auto p = random_params(kind, 3, 31);
    const Triple t{1, 2, 4};
    EXPECT_DOUBLE_EQ(score(p, {Direction::kTail, 1, 2, 0}, 4), score_triple(p, t));
    EXPECT_DOUBLE_EQ(score(p, {Direction::kHead, 4, 2, 0}, 1), score_triple(p, t));
  }
}

TEST(Scoring, ScoreAllMatchesPointwise) {
  for (auto kind : kAllKinds) {
    const auto p = random_params(kind, 3, 37);
    for (auto dir : {Direction::kTail, Direction::kHead}) {
      const Query q{dir, 2, 1, 0};
      const auto all = score_all(p, q);
      ASSERT_EQ(all.size(), p.num_entities);
      for (EntityId y = 0; y < p.num_entities; ++y) EXPECT_DOUBLE_EQ(all[y], score(p, q, y));
    }
  }
}

TEST(Scoring, OutOfRangeIds) {
  const auto p = random_params(ModelKind::kTransE, 2, 1);
  EXPECT_THROW(score(p, {Direction::kTail, 0, 0, 0}, 6), std::out_of_range);
  EXPECT_THROW(score(p, {Direction::kTail, 0, 3, 0}, 1), std::out_of_range);
  EXPECT_THROW(score(p, {Direction::kHead, 9, 0, 0}, 1), std::out_of_range);
}

// Property: analytic gradients match central differences for every model kind.
TEST(ScoreGrad, MatchesFiniteDifferencesOnRandomDraws) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<EntityId> pick_e(0, 5);
  std::uniform_int_distribution<RelationId> pick_r(0, 2);
  const double h = 1e-5;
  int draws = 0;
  double worst = 0;
  for (int round = 0; draws < 1000; ++round) {
    for (auto kind : kAllKinds) {
      auto p = random_params(kind, 3, 100 + round, 1 + round % 2);
      const Query q{round % 3 == 0 ? Direction::kHead : Direction::kTail, pick_e(rng), pick_r(rng), 0};
      const EntityId y = pick_e(rng);
      const auto [s, grad] = score_grad(p, q, y);
      EXPECT_DOUBLE_EQ(s, score(p, q, y));
      for (std::size_t i = 0; i < grad.size(); ++i) {
        const auto slot = grad.slots()[i];
        const auto& g = grad.values(i);
        for (std::size_t k = 0; k < g.size(); ++k) {
          double& x = param_at(p, slot, k);
          const double saved = x;
          x = saved + h;
          const double up = score(p, q, y);
          x = saved - h;
          const double down = score(p, q, y);
          x = saved;
          worst = std::max(worst, relative_error(g[k], (up - down) / (2 * h)));
        }
      }
      ++draws;
    }
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(ScoreGrad, TouchesOnlyInvolvedRows) {
  for (auto kind : kAllKinds) {
    const auto p = random_params(kind, 3, 41);
    const auto [s, grad] = score_grad(p, {Direction::kTail, 1, 2, 0}, 4);
    EXPECT_EQ(grad.size(), kind == ModelKind::kHake ? 4u : 3u);
    EXPECT_NE(grad.find({Table::kEntity, 1}), nullptr);
    EXPECT_NE(grad.find({Table::kEntity, 4}), nullptr);
    EXPECT_NE(grad.find({Table::kRelation, 2}), nullptr);
    EXPECT_EQ(grad.find({Table::kEntity, 0}), nullptr);
  }
}

TEST(ScoreGrad, DistMultHeadGradientIsRelationTimesTail) {
  const auto p = random_params(ModelKind::kDistMult, 4, 43);
  const auto [s, grad] = score_grad(p, {Direction::kTail, 0, 1, 0}, 2);
  const auto* gh = grad.find({Table::kEntity, 0});
  ASSERT_NE(gh, nullptr);
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ((*gh)[i], p.relation(1)[i] * p.entity(2)[i]);
}

TEST(ScoreGrad, TransEZeroResidualCoordinateHasZeroSubgradient) {
  auto p = zeroed(ModelKind::kTransE, 2);
  p.entity(0)[0] = 1.0;
  p.entity(1)[0] = 1.0;  // coordinate 0 residual is zero
  p.entity(1)[1] = 0.5;
  const auto [s, grad] = score_grad(p, {Direction::kTail, 0, 0, 0}, 1);
  EXPECT_DOUBLE_EQ((*grad.find({Table::kEntity, 0}))[0], 0.0);
  EXPECT_DOUBLE_EQ((*grad.find({Table::kEntity, 0}))[1], 1.0);
}

TEST(ScoreGrad, SelfLoopAccumulatesBothRoles) {
  for (auto kind : kAllKinds) {
    auto p = random_params(kind, 3, 47);
    const Query q{Direction::kTail, 2, 0, 0};
    const auto [s, grad] = score_grad(p, q, 2);
    const auto& g = *grad.find({Table::kEntity, 2});
    for (std::size_t k = 0; k < g.size(); ++k) {
      double& x = p.entity(2)[k];
      const double saved = x;
      x = saved + 1e-6;
      const double up = score(p, q, 2);
      x = saved - 1e-6;
      const double down = score(p, q, 2);
      x = saved;
      EXPECT_LT(relative_error(g[k], (up - down) / 2e-6), 1e-5) << to_string(kind);
    }
  }
}

TEST(InitParams, DeterministicPerSeed) {
  for (auto kind : kAllKinds) {
    InitOptions opts{.kind = kind, .dim = 8, .num_entities = 10, .num_relations = 3, .margin = 6, .seed = 5};
    EXPECT_EQ(init_params(opts), init_params(opts));
    auto other = opts;
    other.seed = 6;
    EXPECT_NE(init_params(opts).entities, init_params(other).entities);
  }
}

TEST(InitParams, UniformRangeScalesWithMarginAndDimension) {
  const auto p = init_params({.kind = ModelKind::kTransE, .dim = 1000, .num_entities = 20, .num_relations = 2,
                              .margin = 9, .seed = 1});
  for (double v : p.entities) {
    EXPECT_GE(v, -0.011);
    EXPECT_LE(v, 0.011);
  }
  const auto [lo, hi] = std::minmax_element(p.entities.begin(), p.entities.end());
  EXPECT_LT(*lo, -0.009);
  EXPECT_GT(*hi, 0.009);
}

TEST(InitParams, PhasesAndLambda) {
  const auto rot = init_params({.kind = ModelKind::kRotatE, .dim = 50, .num_entities = 4, .num_relations = 4,
                                .margin = 6, .seed = 2});
  for (double v : rot.relations) {
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 2 * std::numbers::pi);
  }
  const auto hake = init_params({.kind = ModelKind::kHake, .dim = 50, .num_entities = 4, .num_relations = 4,
                                 .margin = 6, .seed = 2});
  EXPECT_GE(hake.phase_weight, -0.01);
  EXPECT_LE(hake.phase_weight, 0.01);
  for (EntityId e = 0; e < 4; ++e) {
    for (std::size_t i = 50; i < 100; ++i) {
      EXPECT_GE(hake.entity(e)[i], 0.0);
      EXPECT_LT(hake.entity(e)[i], 2 * std::numbers::pi);
    }
  }
}

TEST(InitParams, RejectsBadShape) {
  EXPECT_THROW(init_params({.kind = ModelKind::kTransE, .dim = 0, .num_entities = 2, .num_relations = 1}),
               ConfigError);
  EXPECT_THROW(init_params({.kind = ModelKind::kTransE, .dim = 2, .num_entities = 2, .num_relations = 1,
                            .p_norm = 3}),
               ConfigError);
}

TEST(Checkpoint, RoundTripIsBitwise) {
  test::TempDir dir;
  for (auto kind : kAllKinds) {
    const auto p = random_params(kind, 3, 53, kind == ModelKind::kTransE ? 2 : 0);
    save_checkpoint(dir / "c.bin", p, 77);
    const auto loaded = load_checkpoint(dir / "c.bin");
    EXPECT_EQ(loaded.params, p);
    EXPECT_EQ(loaded.header.seed, 77u);
    EXPECT_EQ(loaded.header.num_entities, 6u);
    EXPECT_EQ(loaded.header.kind, kind);
  }
}

TEST(Checkpoint, TruncatedPayloadRejected) {
  test::TempDir dir;
  save_checkpoint(dir / "c.bin", random_params(ModelKind::kDistMult, 3, 1), 1);
  auto bytes = test::read_text(dir / "c.bin");
  test::write_text(dir / "c.bin", bytes.substr(0, bytes.size() - 8));
  EXPECT_THROW(load_checkpoint(dir / "c.bin"), DataError);
  test::write_text(dir / "d.bin", "not a checkpoint\n");
  EXPECT_THROW(load_checkpoint(dir / "d.bin"), DataError);
}
