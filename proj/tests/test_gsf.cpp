#include <gtest/gtest.h>

#include <numbers>

#include "gradcheck.hpp"
#include "vlp/model/gsf.hpp"
#include "vlp/rng.hpp"

using namespace vlp;
using namespace vlp::model;
using vlp::testing::check_gradient;

namespace {

constexpr ModelKind kAllModels[] = {ModelKind::TransE, ModelKind::DistMult, ModelKind::ComplEx, ModelKind::RotatE};

// Store with explicit entity and relation rows.
ParameterStore<double> store_with(ModelKind kind, std::uint32_t dim, std::vector<std::vector<double>> entities,
                                  std::vector<std::vector<double>> relations) {
  auto s = init_parameters<double>(kind, dim, entities.size(), relations.size(), 1);
  for (std::size_t e = 0; e < entities.size(); ++e) std::copy(entities[e].begin(), entities[e].end(), s.entity(e).begin());
  for (std::size_t r = 0; r < relations.size(); ++r)
    std::copy(relations[r].begin(), relations[r].end(), s.relation(r).begin());
  return s;
}

}  // namespace

TEST(Init, DeterministicBoundedAndSeedSensitive) {
  for (auto kind : kAllModels) {
    const auto a = init_parameters<float>(kind, 8, 20, 3, 42);
    EXPECT_EQ(a, init_parameters<float>(kind, 8, 20, 3, 42));
    EXPECT_NE(a, init_parameters<float>(kind, 8, 20, 3, 43));
    const double bound = is_distance_model(kind) ? (kDefaultGamma + 2) / 8 : 6 / std::sqrt(8.0);
    for (float v : a.entities) EXPECT_LE(std::abs(v), bound);
    EXPECT_EQ(a.entity_width(), space_of(kind) == SpaceKind::Complex ? 16u : 8u);
  }
  EXPECT_THROW(init_parameters<float>(ModelKind::TransE, 0, 1, 1, 0), Error);
}

TEST(Init, RotatEUnitModulus) {
  const auto s = init_parameters<double>(ModelKind::RotatE, 16, 4, 5, 3);
  for (double phase : s.relations) {
    EXPECT_LE(std::abs(phase), std::numbers::pi);
    EXPECT_NEAR(std::hypot(std::cos(phase), std::sin(phase)), 1.0, 1e-12);
  }
  // Rotating a unit vector keeps it unit.
  auto u = store_with(ModelKind::RotatE, 1, {{1.0, 0.0}}, {{0.7}});
  const auto q = query_embed(u, 0, 0);
  EXPECT_NEAR(std::hypot(q[0], q[1]), 1.0, 1e-12);
}

TEST(QueryEmbed, HandExamples) {
  const auto transe = store_with(ModelKind::TransE, 2, {{1, 0}}, {{0.5, 0.5}});
  EXPECT_EQ(query_embed(transe, 0, 0), (std::vector<double>{1.5, 0.5}));
  const auto distmult = store_with(ModelKind::DistMult, 2, {{1, 2}}, {{3, 4}});
  EXPECT_EQ(query_embed(distmult, 0, 0), (std::vector<double>{3, 8}));
  const auto rotate = store_with(ModelKind::RotatE, 1, {{1, 0}}, {{std::numbers::pi / 2}});
  const auto q = query_embed(rotate, 0, 0);
  EXPECT_NEAR(q[0], 0.0, 1e-15);
  EXPECT_NEAR(q[1], 1.0, 1e-15);
  // (1+2i)(3+4i) = -5+10i
  const auto complex = store_with(ModelKind::ComplEx, 1, {{1, 2}}, {{3, 4}});
  EXPECT_EQ(query_embed(complex, 0, 0), (std::vector<double>{-5, 10}));
}

TEST(AnswerEmbed, IdentityForEveryModel) {
  for (auto kind : {ModelKind::TransE, ModelKind::DistMult}) {
    const auto s = store_with(kind, 2, {{0.3, -1}, {0, 0}}, {{2, 2}});
    EXPECT_EQ(answer_embed(s, 0, 0), (std::vector<double>{0.3, -1}));
    EXPECT_EQ(answer_embed(s, 1, 0), (std::vector<double>{0, 0}));
  }
  for (auto kind : {ModelKind::ComplEx, ModelKind::RotatE}) {
    const auto s = store_with(kind, 1, {{1, 2}}, {{0.4, 0.1}});
    EXPECT_EQ(answer_embed(s, 0, 0), (std::vector<double>{1, 2}));
  }
}

TEST(Similarity, HandExamples) {
  const std::vector<double> q{0.2, -0.4};
  EXPECT_EQ(similarity(ModelKind::TransE, q, q), 0.0);
  EXPECT_EQ(similarity(ModelKind::DistMult, std::vector<double>{3, 8}, std::vector<double>{2, 1}), 14.0);
  // (1+1i) . conj(1+1i) = 2
  EXPECT_EQ(similarity(ModelKind::ComplEx, std::vector<double>{1, 1}, std::vector<double>{1, 1}), 2.0);
  EXPECT_DOUBLE_EQ(similarity(ModelKind::TransE, std::vector<double>{0, 0}, std::vector<double>{3, 4}), -5.0);
  EXPECT_DOUBLE_EQ(similarity({ModelKind::TransE, Norm::L1}, std::vector<double>{0, 0}, std::vector<double>{3, -4}),
                   -7.0);
  EXPECT_THROW(similarity(ModelKind::DistMult, std::vector<double>{1}, std::vector<double>{1, 2}), Error);
}

TEST(ScoreFg, HandExamples) {
  const auto transe = store_with(ModelKind::TransE, 2, {{0.1, 0.2}, {0.4, -0.3}}, {{0.3, -0.5}});
  EXPECT_NEAR(score_fg(transe, ModelKind::TransE, 0, 0, 1), 0.0, 1e-15);
  const auto rotate = store_with(ModelKind::RotatE, 1, {{1, 0}, {-1, 0}}, {{std::numbers::pi}});
  EXPECT_NEAR(score_fg(rotate, ModelKind::RotatE, 0, 0, 1), 0.0, 1e-12);
  const auto distmult = store_with(ModelKind::DistMult, 2, {{1, 2}, {2, 1}}, {{1, 1}});
  EXPECT_EQ(score_fg(distmult, ModelKind::DistMult, 0, 0, 1), 4.0);
}

TEST(ScoreFgAll, BitExactAgainstSingleScores) {
  for (auto kind : kAllModels)
    for (auto norm : {Norm::L2, Norm::L1}) {
      const GsfModel m{kind, norm};
      const auto s = init_parameters<float>(kind, 5, 3, 2, 7);
      for (EntityId h = 0; h < 3; ++h) {
        const auto all = score_fg_all(s, m, h, 1);
        ASSERT_EQ(all.size(), 3u);
        for (EntityId t = 0; t < 3; ++t) EXPECT_EQ(all[t], score_fg(s, m, h, 1, t));  // includes t == h
      }
    }
}

TEST(GradFg, DistMultHandDerivative) {
  const auto s = store_with(ModelKind::DistMult, 2, {{1, 2}, {2, 1}}, {{1, 1}});
  GradientBuffer g(s);
  grad_fg(s, ModelKind::DistMult, 0, 0, 1, 1.0, g);
  EXPECT_EQ(std::vector<double>(g.entity_row(EntityId{0}).begin(), g.entity_row(EntityId{0}).end()),
            (std::vector<double>{2, 1}));
}

TEST(GradFg, ZeroUpstreamAndRowsTouched) {
  for (auto kind : kAllModels) {
    const auto s = init_parameters<double>(kind, 4, 6, 2, 11);
    GradientBuffer g(s);
    grad_fg(s, kind, 1, 0, 2, 0.0, g);
    EXPECT_TRUE(g.touched_entities().empty());
    for (double v : g.entities()) EXPECT_EQ(v, 0.0);
    grad_fg(s, kind, 1, 1, 3, 0.7, g);
    auto touched = g.touched_entities();
    std::sort(touched.begin(), touched.end());
    EXPECT_EQ(touched, (std::vector<EntityId>{1, 3}));
    EXPECT_EQ(g.touched_relations(), (std::vector<RelationId>{1}));
    EXPECT_FALSE(g.aggregator_touched());
  }
}

TEST(GradFg, CoincidentVectorsGiveZeroGradient) {
  const auto s = store_with(ModelKind::TransE, 2, {{0.1, 0.2}, {0.4, -0.3}}, {{0.3, -0.5}});
  GradientBuffer g(s);
  grad_fg(s, ModelKind::TransE, 0, 0, 1, 1.0, g);
  for (double v : g.entities()) EXPECT_EQ(v, 0.0);
}

TEST(GradFg, MatchesFiniteDifferences) {
  Rng rng(1234);
  for (auto kind : kAllModels)
    for (auto norm : {Norm::L2, Norm::L1}) {
      if (norm == Norm::L1 && !is_distance_model(kind)) continue;
      for (int trial = 0; trial < 5; ++trial) {
        const std::uint32_t dim = 1 + static_cast<std::uint32_t>(rng.below(8));
        auto s = init_parameters<double>(kind, dim, 4, 2, rng.next());
        const GsfModel m{kind, norm};
        const EntityId h = rng.below(4), t = rng.below(4);
        const RelationId r = rng.below(2);
        const double up = rng.uniform(-2, 2);
        GradientBuffer g(s);
        grad_fg(s, m, h, r, t, up, g);
        const auto check = check_gradient(s, g, [&] { return up * score_fg(s, m, h, r, t); });
        EXPECT_LE(check.worst, 1e-4) << to_string(kind) << " dim " << dim << " at " << check.where;
      }
    }
}

TEST(Properties, RotatEGlobalPhaseInvariance) {
  Rng rng(8);
  auto s = init_parameters<double>(ModelKind::RotatE, 6, 3, 1, 5);
  const double before = score_fg(s, ModelKind::RotatE, 0, 0, 1);
  const double theta = 0.83;
  for (EntityId e : {0u, 1u}) {
    auto row = s.entity(e);
    for (std::size_t i = 0; i < 6; ++i) {
      const double a = row[i], b = row[6 + i];
      row[i] = a * std::cos(theta) - b * std::sin(theta);
      row[6 + i] = a * std::sin(theta) + b * std::cos(theta);
    }
  }
  EXPECT_NEAR(score_fg(s, ModelKind::RotatE, 0, 0, 1), before, 1e-9);
}

TEST(Properties, SignsAndSymmetries) {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const auto seed = rng.next();
    for (auto kind : {ModelKind::TransE, ModelKind::RotatE}) {
      const auto s = init_parameters<double>(kind, 5, 4, 2, seed);
      EXPECT_LE(score_fg(s, kind, 0, 1, 2), 0.0);
    }
    const auto dm = init_parameters<double>(ModelKind::DistMult, 5, 4, 2, seed);
    EXPECT_NEAR(score_fg(dm, ModelKind::DistMult, 0, 1, 2), score_fg(dm, ModelKind::DistMult, 2, 1, 0), 1e-12);

    // ComplEx: conj(r) swaps head and tail.
    auto cx = init_parameters<double>(ModelKind::ComplEx, 5, 4, 2, seed);
    for (std::size_t i = 0; i < 5; ++i) cx.relation(1)[5 + i] = -cx.relation(0)[5 + i];
    for (std::size_t i = 0; i < 5; ++i) cx.relation(1)[i] = cx.relation(0)[i];
    EXPECT_NEAR(score_fg(cx, ModelKind::ComplEx, 0, 1, 2), score_fg(cx, ModelKind::ComplEx, 2, 0, 0), 1e-9);
  }
}

TEST(GradCheck, DetectsAPerturbedGradient) {
  auto s = init_parameters<double>(ModelKind::DistMult, 4, 3, 1, 2);
  GradientBuffer g(s);
  grad_fg(s, ModelKind::DistMult, 0, 0, 1, 1.0, g);
  auto f = [&] { return score_fg(s, ModelKind::DistMult, 0, 0, 1); };
  EXPECT_LE(check_gradient(s, g, f).worst, 1e-4);
  g.entity_row(EntityId{1})[2] *= 1.001;
  EXPECT_GT(check_gradient(s, g, f).worst, 1e-4);
}
