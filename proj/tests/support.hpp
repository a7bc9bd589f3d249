#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "vlp/kg/graph.hpp"
#include "vlp/rng.hpp"

namespace vlp::testing {

namespace fs = std::filesystem;

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("vlp-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const noexcept { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

inline std::string to_lines(const std::vector<std::array<std::string, 3>>& triples) {
  std::string out;
  for (const auto& t : triples) out += t[0] + '\t' + t[1] + '\t' + t[2] + '\n';
  return out;
}

// Writes an anonymous-id graph as a dataset directory (names "e<i>", "r<j>").
inline void write_dataset(const fs::path& dir, const kg::KnowledgeGraph& g) {
  fs::create_directories(dir);
  auto dump = [&](const char* name, const std::vector<Triple>& split) {
    std::ofstream os(dir / name);
    for (const auto& t : split)
      os << 'e' << t.head << '\t' << 'r' << t.relation << '\t' << 'e' << t.tail << '\n';
  };
  dump("train.txt", g.train());
  dump("valid.txt", g.valid());
  dump("test.txt", g.test());
}

// All-pairs shortest paths over the undirected training graph, capped.
inline std::vector<std::vector<std::uint32_t>> floyd_warshall(const kg::KnowledgeGraph& g, std::uint32_t cap) {
  const std::size_t n = g.num_entities();
  constexpr std::uint32_t inf = std::numeric_limits<std::uint32_t>::max() / 4;
  std::vector<std::vector<std::uint32_t>> d(n, std::vector<std::uint32_t>(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& t : g.train())
    if (t.head != t.tail) d[t.head][t.tail] = d[t.tail][t.head] = 1;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  for (auto& row : d)
    for (auto& v : row) v = std::min(v, cap);
  return d;
}

// Random multigraph with `n` nodes and `m` training triples over `r` relations.
inline kg::KnowledgeGraph random_graph(Rng& rng, std::size_t n, std::size_t m, std::size_t r) {
  std::vector<Triple> train;
  for (std::size_t i = 0; i < m; ++i)
    train.push_back({static_cast<EntityId>(rng.below(n)), static_cast<RelationId>(rng.below(r)),
                     static_cast<EntityId>(rng.below(n))});
  return kg::KnowledgeGraph::from_triples(n, r, std::move(train));
}

// Small compositional KG: groups of heads x linked by r0 to a hub y, the hub
// linked by r1 to a target z, and the rule r0 ∧ r1 → r2 giving (x, r2, z).
// Every group holds out one rule triple for valid and one for test.
struct Compositional {
  kg::KnowledgeGraph graph;  // not augmented
  std::size_t groups = 0;
  std::size_t heads = 0;
};

inline Compositional compositional_kg(std::size_t groups, std::size_t heads_per_group, std::uint64_t seed,
                                      std::size_t noise_edges = 0) {
  Rng rng(seed);
  const std::size_t per_group = heads_per_group + 2;
  const std::size_t n = groups * per_group;
  std::vector<Triple> train, valid, test;
  for (std::size_t g = 0; g < groups; ++g) {
    const auto base = static_cast<EntityId>(g * per_group);
    const EntityId hub = base + static_cast<EntityId>(heads_per_group);
    const EntityId target = hub + 1;
    train.push_back({hub, 1, target});
    std::vector<std::size_t> order(heads_per_group);
    for (std::size_t j = 0; j < heads_per_group; ++j) order[j] = j;
    rng.shuffle(order.begin(), order.end());
    for (std::size_t k = 0; k < heads_per_group; ++k) {
      const EntityId x = base + static_cast<EntityId>(order[k]);
      train.push_back({x, 0, hub});
      const Triple rule{x, 2, target};
      if (k == 0) test.push_back(rule);
      else if (k == 1) valid.push_back(rule);
      else train.push_back(rule);
    }
  }
  for (std::size_t i = 0; i < noise_edges; ++i)
    train.push_back({static_cast<EntityId>(rng.below(n)), 3, static_cast<EntityId>(rng.below(n))});
  return {kg::KnowledgeGraph::from_triples(n, noise_edges ? 4 : 3, std::move(train), std::move(valid),
                                           std::move(test)),
          groups, heads_per_group};
}

// Two planted rules per group: r0∧r1→r2 (held-out pairs at distance 2) and
// r0∧r1∧r3→r4 (distance 3). One head per group goes to test, one to valid.
inline Compositional planted_rule_kg(std::size_t groups, std::size_t heads_per_group, std::uint64_t seed,
                                     std::size_t noise_edges = 0) {
  Rng rng(seed);
  const std::size_t per_group = heads_per_group + 3;
  const std::size_t n = groups * per_group;
  std::vector<Triple> train, valid, test;
  for (std::size_t g = 0; g < groups; ++g) {
    const auto base = static_cast<EntityId>(g * per_group);
    const EntityId hub = base + static_cast<EntityId>(heads_per_group);
    const EntityId target = hub + 1, far = hub + 2;
    train.push_back({hub, 1, target});
    train.push_back({target, 3, far});
    std::vector<std::size_t> order(heads_per_group);
    for (std::size_t j = 0; j < heads_per_group; ++j) order[j] = j;
    rng.shuffle(order.begin(), order.end());
    for (std::size_t k = 0; k < heads_per_group; ++k) {
      const EntityId x = base + static_cast<EntityId>(order[k]);
      train.push_back({x, 0, hub});
      auto& split = k == 0 ? test : k == 1 ? valid : train;
      split.push_back({x, 2, target});
      split.push_back({x, 4, far});
    }
  }
  for (std::size_t i = 0; i < noise_edges; ++i)
    train.push_back({static_cast<EntityId>(rng.below(n)), 5, static_cast<EntityId>(rng.below(n))});
  return {kg::KnowledgeGraph::from_triples(n, noise_edges ? 6 : 5, std::move(train), std::move(valid),
                                           std::move(test)),
          groups, heads_per_group};
}

}  // namespace vlp::testing
