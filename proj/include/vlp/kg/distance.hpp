#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <thread>
#include <vector>

#include "vlp/binary_io.hpp"
#include "vlp/kg/graph.hpp"

namespace vlp::kg {

inline constexpr std::uint32_t kDefaultDistanceCap = 8;

// Capped shortest-hop distances over the undirected, relation-agnostic
// training graph. Each source keeps a row of (entity, distance) for entities
// closer than `cap`, sorted by entity id; anything absent is at distance `cap`.
class DistanceIndex {
 public:
  struct Entry {
    EntityId entity;
    std::uint8_t distance;
  };

  DistanceIndex() = default;
  DistanceIndex(std::uint32_t cap, std::vector<std::vector<Entry>> rows) : cap_(cap) {
    offsets_.reserve(rows.size() + 1);
    offsets_.push_back(0);
    for (auto& row : rows) {
      std::sort(row.begin(), row.end(), [](const Entry& a, const Entry& b) { return a.entity < b.entity; });
      for (const auto& e : row) {
        entities_.push_back(e.entity);
        distances_.push_back(e.distance);
      }
      offsets_.push_back(entities_.size());
    }
  }

  std::uint32_t cap() const noexcept { return cap_; }
  std::size_t num_entities() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t stored_pairs() const noexcept { return entities_.size(); }

  // Entities within `cap` hops of `source`, ascending id.
  std::span<const EntityId> row_entities(EntityId source) const {
    return std::span(entities_).subspan(offsets_[source], offsets_[source + 1] - offsets_[source]);
  }
  std::span<const std::uint8_t> row_distances(EntityId source) const {
    return std::span(distances_).subspan(offsets_[source], offsets_[source + 1] - offsets_[source]);
  }

  std::uint32_t distance(EntityId a, EntityId b) const {
    const auto ents = row_entities(a);
    auto it = std::lower_bound(ents.begin(), ents.end(), b);
    if (it == ents.end() || *it != b) return cap_;
    return row_distances(a)[static_cast<std::size_t>(it - ents.begin())];
  }

  friend bool operator==(const DistanceIndex&, const DistanceIndex&) = default;

 private:
  std::uint32_t cap_ = kDefaultDistanceCap;
  std::vector<std::uint64_t> offsets_;
  std::vector<EntityId> entities_;
  std::vector<std::uint8_t> distances_;
};

namespace detail {

// Deduplicated undirected neighbor lists.
inline std::vector<std::vector<EntityId>> undirected_adjacency(const KnowledgeGraph& g) {
  std::vector<std::vector<EntityId>> adj(g.num_entities());
  for (const auto& t : g.train()) {
    if (t.head == t.tail) continue;
    adj[t.head].push_back(t.tail);
    adj[t.tail].push_back(t.head);
  }
  for (auto& n : adj) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return adj;
}

inline std::vector<DistanceIndex::Entry> bfs_row(const std::vector<std::vector<EntityId>>& adj,
                                                 EntityId source, std::uint32_t cap,
                                                 std::vector<std::uint8_t>& visited) {
  std::vector<DistanceIndex::Entry> row{{source, 0}};
  visited[source] = 1;
  std::size_t frontier_begin = 0;
  for (std::uint32_t depth = 1; depth < cap; ++depth) {
    const std::size_t frontier_end = row.size();
    for (std::size_t i = frontier_begin; i < frontier_end; ++i)
      for (EntityId n : adj[row[i].entity])
        if (!visited[n]) {
          visited[n] = 1;
          row.push_back({n, static_cast<std::uint8_t>(depth)});
        }
    if (row.size() == frontier_end) break;
    frontier_begin = frontier_end;
  }
  for (const auto& e : row) visited[e.entity] = 0;
  return row;
}

}  // namespace detail

// Breadth-first search from every entity, truncated at depth `cap`.
inline DistanceIndex compute_distances(const KnowledgeGraph& g, std::uint32_t cap = kDefaultDistanceCap,
                                       unsigned threads = 1) {
  if (cap < 1 || cap > 255) throw Error("distance cap must be in [1, 255]");
  const auto adj = detail::undirected_adjacency(g);
  const std::size_t n = g.num_entities();
  std::vector<std::vector<DistanceIndex::Entry>> rows(n);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  auto work = [&](unsigned worker) {
    std::vector<std::uint8_t> visited(n, 0);
    for (std::size_t s = worker; s < n; s += threads)
      rows[s] = detail::bfs_row(adj, static_cast<EntityId>(s), cap, visited);
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
  }
  return DistanceIndex(cap, std::move(rows));
}

inline constexpr std::uint32_t kDistanceCacheVersion = 1;

// Layout: "VLPD", version u32, cap u32, entity count u64, per-entity rows of
// (length u32, (entity u32, distance u8)*), then a trailing u64 train-file hash.
inline void save_distance_cache(const std::filesystem::path& path, const DistanceIndex& index,
                                std::uint64_t train_hash) {
  io::write_atomically(path, [&](io::Writer& w) {
    w.magic("VLPD");
    w.put<std::uint32_t>(kDistanceCacheVersion);
    w.put<std::uint32_t>(index.cap());
    w.put<std::uint64_t>(index.num_entities());
    for (EntityId s = 0; s < index.num_entities(); ++s) {
      const auto ents = index.row_entities(s);
      const auto dist = index.row_distances(s);
      w.put<std::uint32_t>(static_cast<std::uint32_t>(ents.size()));
      for (std::size_t i = 0; i < ents.size(); ++i) {
        w.put<std::uint32_t>(ents[i]);
        w.put<std::uint8_t>(dist[i]);
      }
    }
    w.put<std::uint64_t>(train_hash);
  });
}

struct DistanceCache {
  DistanceIndex index;
  std::uint64_t train_hash = 0;
};

inline DistanceCache load_distance_cache(const std::filesystem::path& path) {
  io::Reader r(path);
  r.expect_magic("VLPD");
  if (r.get<std::uint32_t>() != kDistanceCacheVersion) throw FormatError(path.string() + ": unsupported version");
  const auto cap = r.get<std::uint32_t>();
  if (cap < 1 || cap > 255) throw FormatError(path.string() + ": invalid cap");
  const auto n = r.get<std::uint64_t>();
  if (n > (1ULL << 32)) throw FormatError(path.string() + ": invalid entity count");
  std::vector<std::vector<DistanceIndex::Entry>> rows(n);
  for (auto& row : rows) {
    const auto len = r.get<std::uint32_t>();
    if (len > n) throw FormatError(path.string() + ": invalid row length");
    row.resize(len);
    for (auto& e : row) {
      e.entity = r.get<std::uint32_t>();
      e.distance = r.get<std::uint8_t>();
      if (e.entity >= n || e.distance >= cap) throw FormatError(path.string() + ": invalid row entry");
    }
  }
  DistanceCache out{DistanceIndex(cap, std::move(rows)), r.get<std::uint64_t>()};
  if (!r.at_end()) throw FormatError(path.string() + ": trailing bytes");
  return out;
}

inline constexpr int kNumDistanceBuckets = 4;

// Bucket 1..4 for the head/tail distance; 4 collects everything >= 4 (and
// unreachable pairs). Self-loops land in bucket 1.
inline int distance_bucket(std::uint32_t d) {
  if (d <= 1) return 1;
  return static_cast<int>(std::min<std::uint32_t>(d, kNumDistanceBuckets));
}

// Test triples grouped by bucket; index 0 holds bucket 1.
inline std::array<std::vector<Triple>, kNumDistanceBuckets> distance_split(const KnowledgeGraph& g,
                                                                          const DistanceIndex& index) {
  std::array<std::vector<Triple>, kNumDistanceBuckets> out;
  for (const auto& t : g.test()) out[distance_bucket(index.distance(t.head, t.tail)) - 1].push_back(t);
  return out;
}

}  // namespace vlp::kg
