#include <gtest/gtest.h>

#include <cstdlib>
#include <set>

#include "support.hpp"
#include "vlp/kg/distance.hpp"
#include "vlp/kg/graph.hpp"

using namespace vlp;
using namespace vlp::kg;
using vlp::testing::TempDir;
using vlp::testing::write_text;

namespace {

void write_splits(const TempDir& dir, const std::string& train, const std::string& valid, const std::string& test) {
  write_text(dir / "train.txt", train);
  write_text(dir / "valid.txt", valid);
  write_text(dir / "test.txt", test);
}

}  // namespace

TEST(LoadDataset, DenseLexicographicIdsAndDedup) {
  TempDir dir("load");
  write_splits(dir, "b\tlikes\ta\nb\tlikes\ta\na\tknows\tc\n", "c\tlikes\ta\n", "a\tknows\tb\n");
  const auto g = load_dataset(dir.path());
  EXPECT_EQ(g.num_entities(), 3u);
  EXPECT_EQ(g.num_relations(), 2u);
  EXPECT_EQ(g.vocab().entity_names(), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(g.vocab().relation_names(), (std::vector<std::string>{"knows", "likes"}));
  ASSERT_EQ(g.train().size(), 2u);  // the duplicate line collapses
  EXPECT_EQ(g.valid().size(), 1u);
  EXPECT_EQ(g.test().size(), 1u);
  EXPECT_EQ(*g.vocab().entity_id("b"), 1u);
  EXPECT_FALSE(g.vocab().entity_id("zzz").has_value());
  EXPECT_TRUE(g.warnings().empty());
}

TEST(LoadDataset, MissingFileIsDatasetNotFound) {
  TempDir dir("missing");
  write_text(dir / "train.txt", "a\tr\tb\n");
  EXPECT_THROW(load_dataset(dir.path()), DatasetNotFound);
}

TEST(LoadDataset, EmptyTrainIsDatasetNotFound) {
  TempDir dir("empty");
  write_splits(dir, "", "a\tr\tb\n", "a\tr\tb\n");
  EXPECT_THROW(load_dataset(dir.path()), DatasetNotFound);
}

TEST(LoadDataset, MalformedLineReportsLineNumber) {
  TempDir dir("malformed");
  write_splits(dir, "a\tr\tb\nb\tr\nc\tr\ta\n", "", "");
  try {
    load_dataset(dir.path());
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  write_splits(dir, "a\tr\tb\tx\n", "", "");
  EXPECT_THROW(load_dataset(dir.path()), ParseError);
}

TEST(LoadDataset, UnseenValidTestNamesAreWarningsAndKept) {
  TempDir dir("unseen");
  write_splits(dir, "a\tr\tb\n", "a\tq\tb\n", "a\tr\tnew\n");
  const auto g = load_dataset(dir.path());
  EXPECT_EQ(g.num_entities(), 3u);
  EXPECT_EQ(g.test().size(), 1u);
  ASSERT_EQ(g.warnings().size(), 2u);
  std::set<std::string> w(g.warnings().begin(), g.warnings().end());
  EXPECT_TRUE(w.count("relation not in train: q"));
  EXPECT_TRUE(w.count("entity not in train: new"));
}

TEST(LoadDataset, AdjacencyHoldsTrainingTriplesOnly) {
  TempDir dir("adj");
  write_splits(dir, "a\tr\tb\n", "b\tr\tc\n", "c\tr\ta\n");
  const auto g = load_dataset(dir.path());
  std::size_t edges = 0;
  for (EntityId e = 0; e < g.num_entities(); ++e) edges += g.neighbors(e).size();
  EXPECT_EQ(edges, 2u);  // one outgoing, one incoming record for a->b
  EXPECT_TRUE(g.neighbors(2).empty());
}

TEST(Augment, SingleTripleMirrors) {
  const auto g = KnowledgeGraph::from_triples(2, 1, {{0, 0, 1}}).augment_reciprocal();
  EXPECT_EQ(g.num_relations(), 2u);
  EXPECT_EQ(g.num_base_relations(), 1u);
  EXPECT_EQ(g.train(), (std::vector<Triple>{{0, 0, 1}, {1, 1, 0}}));
  EXPECT_EQ(g.reciprocal(0), 1u);
  EXPECT_EQ(g.reciprocal(1), 0u);
  EXPECT_EQ(g.relation_label(1), "r0_reverse");
}

TEST(Augment, SelfLoopKeepsBoth) {
  const auto g = KnowledgeGraph::from_triples(1, 1, {{0, 0, 0}}).augment_reciprocal();
  EXPECT_EQ(g.train(), (std::vector<Triple>{{0, 0, 0}, {0, 1, 0}}));
}

TEST(Augment, DoublesSplitsAndRejectsTwice) {
  const auto g = KnowledgeGraph::from_triples(3, 2, {{0, 0, 1}, {1, 1, 2}}, {{0, 1, 2}}, {{2, 0, 0}, {1, 0, 0}});
  const auto a = augment_reciprocal(g);
  EXPECT_EQ(a.num_relations(), 4u);
  EXPECT_EQ(a.train().size(), 4u);
  EXPECT_EQ(a.valid().size(), 2u);
  EXPECT_EQ(a.test().size(), 4u);
  for (const auto& t : g.train())
    EXPECT_TRUE(std::binary_search(a.train().begin(), a.train().end(),
                                   Triple{t.tail, static_cast<RelationId>(t.relation + 2), t.head}));
  EXPECT_THROW(a.augment_reciprocal(), Error);
}

TEST(Augment, InvariantToTrainLineOrder) {
  TempDir one("order1"), two("order2");
  const std::string valid = "a\tr\tc\n", test = "c\ts\tb\n";
  write_splits(one, "a\tr\tb\nb\ts\tc\nc\tr\ta\n", valid, test);
  write_splits(two, "c\tr\ta\na\tr\tb\nb\ts\tc\n", valid, test);
  const auto g1 = load_dataset(one.path()).augment_reciprocal();
  const auto g2 = load_dataset(two.path()).augment_reciprocal();
  EXPECT_EQ(g1.train(), g2.train());
  EXPECT_EQ(g1.test(), g2.test());
  EXPECT_EQ(g1.vocab().fingerprint(), g2.vocab().fingerprint());
}

TEST(Distances, PathGraph) {
  // a-b-c-d
  const auto g = KnowledgeGraph::from_triples(4, 1, {{0, 0, 1}, {2, 0, 1}, {2, 0, 3}});
  const auto d = compute_distances(g, 8);
  EXPECT_EQ(d.distance(0, 2), 2u);
  EXPECT_EQ(d.distance(0, 3), 3u);
  EXPECT_EQ(d.distance(1, 1), 0u);
  const auto oracle = vlp::testing::floyd_warshall(g, 8);
  for (EntityId i = 0; i < 4; ++i)
    for (EntityId j = 0; j < 4; ++j) EXPECT_EQ(d.distance(i, j), oracle[i][j]);
}

TEST(Distances, DisconnectedComponentsAtCap) {
  const auto g = KnowledgeGraph::from_triples(5, 1, {{0, 0, 1}, {2, 0, 3}});
  const auto d = compute_distances(g, 8);
  EXPECT_EQ(d.distance(0, 2), 8u);
  EXPECT_EQ(d.distance(4, 0), 8u);
  EXPECT_EQ(d.distance(4, 4), 0u);
  EXPECT_THROW(compute_distances(g, 0), Error);
}

TEST(Distances, MatchesFloydWarshallOnRandomGraphs) {
  Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + rng.below(49);
    const auto g = vlp::testing::random_graph(rng, n, rng.below(2 * n), 3);
    const std::uint32_t cap = 1 + static_cast<std::uint32_t>(rng.below(8));
    const auto d = compute_distances(g, cap, 1 + trial % 3);
    const auto oracle = vlp::testing::floyd_warshall(g, cap);
    for (EntityId i = 0; i < n; ++i)
      for (EntityId j = 0; j < n; ++j) ASSERT_EQ(d.distance(i, j), oracle[i][j]) << trial << ' ' << i << ' ' << j;
  }
}

TEST(Distances, SymmetricTriangleAndThreadCountIndependent) {
  Rng rng(5);
  const auto g = vlp::testing::random_graph(rng, 60, 70, 2);
  const auto d = compute_distances(g, 6, 1);
  EXPECT_EQ(d, compute_distances(g, 6, 4));
  for (EntityId a = 0; a < 60; ++a)
    for (EntityId b = 0; b < 60; ++b) {
      ASSERT_EQ(d.distance(a, b), d.distance(b, a));
      for (EntityId c = 0; c < 60; c += 7) {
        const auto via = d.distance(a, c) + d.distance(c, b);
        if (via < 6) {
          ASSERT_LE(d.distance(a, b), via);
        }
      }
    }
}

TEST(DistanceCache, RoundTripAndCorruption) {
  TempDir dir("dcache");
  Rng rng(9);
  const auto g = vlp::testing::random_graph(rng, 30, 40, 2);
  const auto d = compute_distances(g, 5);
  save_distance_cache(dir / "dist.vlpd", d, 0x1234);
  const auto loaded = load_distance_cache(dir / "dist.vlpd");
  EXPECT_EQ(loaded.index, d);
  EXPECT_EQ(loaded.train_hash, 0x1234u);
  EXPECT_EQ(vlp::testing::read_text(dir / "dist.vlpd").substr(0, 4), "VLPD");

  auto bytes = vlp::testing::read_text(dir / "dist.vlpd");
  bytes[0] = 'X';
  vlp::testing::write_text(dir / "bad.vlpd", bytes);
  EXPECT_THROW(load_distance_cache(dir / "bad.vlpd"), FormatError);
  vlp::testing::write_text(dir / "short.vlpd", bytes.substr(0, bytes.size() / 2).replace(0, 1, "V"));
  EXPECT_THROW(load_distance_cache(dir / "short.vlpd"), FormatError);
}

TEST(Filter, SingletonEmptyAndLinearScanOracle) {
  const auto g = KnowledgeGraph::from_triples(10, 2, {{0, 0, 1}, {0, 0, 2}, {3, 1, 4}}, {{0, 0, 5}}, {{6, 1, 7}});
  const FilterIndex f(g);
  EXPECT_EQ(filter_candidates(f, 3, 1), (std::vector<EntityId>{4}));
  EXPECT_TRUE(filter_candidates(f, 9, 0).empty());

  Rng rng(3);
  const auto r = vlp::testing::random_graph(rng, 10, 40, 3);
  const auto big = KnowledgeGraph::from_triples(10, 3, r.train(), {{1, 0, 2}, {4, 2, 4}}, {{1, 0, 9}});
  const FilterIndex fi(big);
  for (EntityId h = 0; h < 10; ++h)
    for (RelationId rel = 0; rel < 3; ++rel) {
      std::set<EntityId> scan;
      for (const auto* split : {&big.train(), &big.valid(), &big.test()})
        for (const auto& t : *split)
          if (t.head == h && t.relation == rel) scan.insert(t.tail);
      EXPECT_EQ(filter_candidates(fi, h, rel), std::vector<EntityId>(scan.begin(), scan.end()));
    }
  for (const auto& t : big.test()) EXPECT_TRUE(fi.contains(t.head, t.relation, t.tail));
}

TEST(DistanceSplit, BucketsPartitionTest) {
  Rng rng(21);
  const auto base = vlp::testing::random_graph(rng, 40, 50, 2);
  std::vector<Triple> test;
  for (int i = 0; i < 60; ++i)
    test.push_back({static_cast<EntityId>(rng.below(40)), 0, static_cast<EntityId>(rng.below(40))});
  const auto g = KnowledgeGraph::from_triples(40, 2, base.train(), {}, test);
  const auto d = compute_distances(g, 8);
  const auto split = distance_split(g, d);
  std::size_t total = 0;
  for (int b = 0; b < kNumDistanceBuckets; ++b) {
    total += split[b].size();
    for (const auto& t : split[b]) EXPECT_EQ(distance_bucket(d.distance(t.head, t.tail)), b + 1);
  }
  EXPECT_EQ(total, g.test().size());
}

TEST(DistanceSplit, DirectlyLinkedIsBucketOne) {
  const auto g = KnowledgeGraph::from_triples(3, 2, {{0, 0, 1}}, {}, {{0, 1, 1}, {1, 1, 0}, {2, 1, 2}});
  const auto split = distance_split(g, compute_distances(g));
  EXPECT_EQ(split[0].size(), 3u);  // includes the self-loop
  EXPECT_EQ(distance_bucket(8), 4);
  EXPECT_EQ(distance_bucket(3), 3);
}

TEST(Rmp, DirectCounts) {
  // r0: single pair. r1: a->{x,y,z}. r2: {a,b} x {x,y}.
  const auto g = KnowledgeGraph::from_triples(
      8, 4, {{0, 0, 1}, {2, 1, 3}, {2, 1, 4}, {2, 1, 5}, {6, 2, 3}, {7, 2, 3}, {6, 2, 4}, {7, 2, 4}});
  const auto m = rmp_classify(g);
  EXPECT_EQ(m[0], MappingProperty::OneToOne);
  EXPECT_EQ(m[1], MappingProperty::OneToMany);
  EXPECT_EQ(m[2], MappingProperty::ManyToMany);
  EXPECT_EQ(m[3], MappingProperty::OneToOne);  // absent from train
  EXPECT_EQ(classify_mapping({1.0, 3.0}), MappingProperty::ManyToOne);
  EXPECT_EQ(classify_mapping({1.49, 1.5}), MappingProperty::ManyToOne);

  const auto a = rmp_classify(g.augment_reciprocal());
  EXPECT_EQ(a[1], MappingProperty::OneToMany);
  EXPECT_EQ(a[5], MappingProperty::ManyToOne);  // reciprocal of r1
}
