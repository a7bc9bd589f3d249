#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <thread>
#include <unordered_map>
#include <vector>

#include "vlp/binary_io.hpp"
#include "vlp/kg/distance.hpp"
#include "vlp/kg/graph.hpp"

namespace vlp::vertical {

// A training triple (head, r, tail) used as a reference for queries on r.
struct Reference {
  EntityId head;
  EntityId tail;
  friend bool operator==(const Reference&, const Reference&) = default;
};

// Pre-selected references per (head, relation) query. Each list holds up to
// count()+1 entries so that `count()` remain after masking the query's own
// training triple.
class ReferenceTable {
 public:
  struct Key {
    EntityId head;
    RelationId relation;
    friend auto operator<=>(const Key&, const Key&) = default;
  };

  ReferenceTable() = default;

  // `entries` must be sorted by key.
  ReferenceTable(std::uint32_t count, std::vector<std::pair<Key, std::vector<Reference>>> entries)
      : count_(count) {
    offsets_.push_back(0);
    for (auto& [key, refs] : entries) {
      index_.emplace(pack(key), keys_.size());
      keys_.push_back(key);
      refs_.insert(refs_.end(), refs.begin(), refs.end());
      offsets_.push_back(refs_.size());
    }
  }

  std::uint32_t count() const noexcept { return count_; }
  std::size_t size() const noexcept { return keys_.size(); }
  const std::vector<Key>& keys() const noexcept { return keys_; }

  bool contains(EntityId h, RelationId r) const { return index_.count(pack({h, r})) != 0; }

  // Stored candidates for (h, r), nearest first; empty if the key is unknown.
  std::span<const Reference> candidates(EntityId h, RelationId r) const {
    auto it = index_.find(pack({h, r}));
    if (it == index_.end()) return {};
    const auto i = it->second;
    return std::span(refs_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
  }

  // First `n` references for (h, r), skipping the triple (h, r, masked_tail).
  std::vector<Reference> lookup(EntityId h, RelationId r, std::optional<EntityId> masked_tail,
                                std::size_t n) const {
    std::vector<Reference> out;
    for (const auto& ref : candidates(h, r)) {
      if (out.size() == n) break;
      if (masked_tail && ref.head == h && ref.tail == *masked_tail) continue;
      out.push_back(ref);
    }
    return out;
  }
  std::vector<Reference> lookup(EntityId h, RelationId r, std::optional<EntityId> masked_tail) const {
    return lookup(h, r, masked_tail, count_);
  }

  // Same table restricted to `n` <= count() references per query.
  ReferenceTable truncated(std::uint32_t n) const {
    if (n > count_) throw Error("cannot extend a reference table by truncation");
    std::vector<std::pair<Key, std::vector<Reference>>> entries;
    entries.reserve(keys_.size());
    for (const auto& key : keys_) {
      auto c = candidates(key.head, key.relation);
      entries.emplace_back(key, std::vector<Reference>(c.begin(), c.begin() + std::min<std::size_t>(c.size(), n + 1)));
    }
    return ReferenceTable(n, std::move(entries));
  }

  friend bool operator==(const ReferenceTable& a, const ReferenceTable& b) {
    return a.count_ == b.count_ && a.keys_ == b.keys_ && a.offsets_ == b.offsets_ && a.refs_ == b.refs_;
  }

 private:
  static std::uint64_t pack(Key k) { return (std::uint64_t{k.head} << 32) | k.relation; }

  std::uint32_t count_ = 0;
  std::vector<Key> keys_;
  std::vector<std::size_t> offsets_{};
  std::vector<Reference> refs_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

namespace detail {

struct HeadRank {
  std::uint32_t distance;
  std::size_t frequency;
  EntityId head;
};

// Nearest first; ties by training frequency (descending), then id.
inline bool closer(const HeadRank& a, const HeadRank& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  if (a.frequency != b.frequency) return a.frequency > b.frequency;
  return a.head < b.head;
}

class RelationHeads {
 public:
  explicit RelationHeads(const kg::KnowledgeGraph& g) : heads_(g.num_relations()) {
    for (const auto& t : g.train()) tails_[pack(t.head, t.relation)].push_back(t.tail);
    for (auto& [k, v] : tails_) std::sort(v.begin(), v.end());
    for (const auto& [k, v] : tails_) heads_[k & 0xffffffffu].push_back(static_cast<EntityId>(k >> 32));
    for (auto& hs : heads_) {
      std::sort(hs.begin(), hs.end(), [&](EntityId a, EntityId b) {
        return closer({0, g.head_frequency(a), a}, {0, g.head_frequency(b), b});
      });
    }
  }

  std::span<const EntityId> tails(EntityId h, RelationId r) const {
    auto it = tails_.find(pack(h, r));
    if (it == tails_.end()) return {};
    return it->second;
  }
  // Heads with at least one training triple on r, by frequency desc then id.
  const std::vector<EntityId>& heads(RelationId r) const { return heads_[r]; }

 private:
  static std::uint64_t pack(EntityId h, RelationId r) { return (std::uint64_t{h} << 32) | r; }
  std::unordered_map<std::uint64_t, std::vector<EntityId>> tails_;
  std::vector<std::vector<EntityId>> heads_;
};

}  // namespace detail

// For every (h, r) queried by any split, ranks the training triples on r by
// the distance of their head to h and keeps the first count+1.
inline ReferenceTable select_references(const kg::KnowledgeGraph& g, const kg::DistanceIndex& dist,
                                        std::uint32_t count, unsigned threads = 1) {
  using Key = ReferenceTable::Key;
  std::vector<Key> keys;
  for (const auto* split : {&g.train(), &g.valid(), &g.test()})
    for (const auto& t : *split) keys.push_back({t.head, t.relation});
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  const detail::RelationHeads index(g);
  const std::size_t limit = std::size_t{count} + 1;

  // Group key ranges by head so the sorted neighbourhood is built once per head.
  std::vector<std::size_t> group_starts;
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (i == 0 || keys[i].head != keys[i - 1].head) group_starts.push_back(i);
  group_starts.push_back(keys.size());

  std::vector<std::vector<Reference>> lists(keys.size());
  auto process_group = [&](std::size_t gi) {
    const EntityId h = keys[group_starts[gi]].head;
    const auto row_e = dist.row_entities(h);
    const auto row_d = dist.row_distances(h);
    std::vector<detail::HeadRank> near;
    near.reserve(row_e.size());
    for (std::size_t i = 0; i < row_e.size(); ++i) near.push_back({row_d[i], g.head_frequency(row_e[i]), row_e[i]});
    std::sort(near.begin(), near.end(), detail::closer);

    for (std::size_t ki = group_starts[gi]; ki < group_starts[gi + 1]; ++ki) {
      const RelationId r = keys[ki].relation;
      auto& out = lists[ki];
      auto take = [&](EntityId head) {
        for (EntityId t : index.tails(head, r)) {
          if (out.size() == limit) return;
          out.push_back({head, t});
        }
      };
      const auto& heads_r = index.heads(r);
      if (heads_r.size() < near.size()) {
        // Rank the relation's heads directly.
        std::vector<detail::HeadRank> ranked;
        ranked.reserve(heads_r.size());
        for (EntityId e : heads_r) ranked.push_back({dist.distance(h, e), g.head_frequency(e), e});
        std::sort(ranked.begin(), ranked.end(), detail::closer);
        for (const auto& hr : ranked) {
          if (out.size() == limit) break;
          take(hr.head);
        }
      } else {
        // Walk the neighbourhood, then fall back to heads at the cap distance.
        for (const auto& hr : near) {
          if (out.size() == limit) break;
          take(hr.head);
        }
        for (EntityId e : heads_r) {
          if (out.size() == limit) break;
          if (std::binary_search(row_e.begin(), row_e.end(), e)) continue;
          take(e);
        }
      }
    }
  };

  const std::size_t groups = group_starts.size() - 1;
  threads = std::max(1u, threads);
  if (threads == 1) {
    for (std::size_t gi = 0; gi < groups; ++gi) process_group(gi);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t gi = w; gi < groups; gi += threads) process_group(gi);
      });
  }

  std::vector<std::pair<Key, std::vector<Reference>>> entries;
  entries.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) entries.emplace_back(keys[i], std::move(lists[i]));
  return ReferenceTable(count, std::move(entries));
}

inline constexpr std::uint32_t kReferenceCacheVersion = 1;

struct ReferenceCache {
  ReferenceTable table;
  std::uint64_t train_hash = 0;
  std::uint32_t distance_cap = 0;
};

// Layout: "VLPR", version u32, N u32, entry count u64, per entry
// (h u32, r u32, length u8, (h_i u32, t_i u32)*), then trailing train-file
// hash u64 and distance cap u32.
inline void save_reference_cache(const std::filesystem::path& path, const ReferenceTable& table,
                                 std::uint64_t train_hash, std::uint32_t distance_cap) {
  if (table.count() + 1 > 255) throw Error("reference count too large for the cache format");
  io::write_atomically(path, [&](io::Writer& w) {
    w.magic("VLPR");
    w.put<std::uint32_t>(kReferenceCacheVersion);
    w.put<std::uint32_t>(table.count());
    w.put<std::uint64_t>(table.size());
    for (const auto& key : table.keys()) {
      const auto refs = table.candidates(key.head, key.relation);
      w.put<std::uint32_t>(key.head);
      w.put<std::uint32_t>(key.relation);
      w.put<std::uint8_t>(static_cast<std::uint8_t>(refs.size()));
      for (const auto& ref : refs) {
        w.put<std::uint32_t>(ref.head);
        w.put<std::uint32_t>(ref.tail);
      }
    }
    w.put<std::uint64_t>(train_hash);
    w.put<std::uint32_t>(distance_cap);
  });
}

inline ReferenceCache load_reference_cache(const std::filesystem::path& path) {
  io::Reader r(path);
  r.expect_magic("VLPR");
  if (r.get<std::uint32_t>() != kReferenceCacheVersion) throw FormatError(path.string() + ": unsupported version");
  const auto count = r.get<std::uint32_t>();
  const auto n = r.get<std::uint64_t>();
  std::vector<std::pair<ReferenceTable::Key, std::vector<Reference>>> entries;
  entries.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1u << 24)));
  for (std::uint64_t i = 0; i < n; ++i) {
    ReferenceTable::Key key{r.get<std::uint32_t>(), r.get<std::uint32_t>()};
    const auto len = r.get<std::uint8_t>();
    if (len > count + 1) throw FormatError(path.string() + ": reference list too long");
    std::vector<Reference> refs(len);
    for (auto& ref : refs) {
      ref.head = r.get<std::uint32_t>();
      ref.tail = r.get<std::uint32_t>();
    }
    if (!entries.empty() && !(entries.back().first < key)) throw FormatError(path.string() + ": unsorted keys");
    entries.emplace_back(key, std::move(refs));
  }
  ReferenceCache out;
  out.train_hash = r.get<std::uint64_t>();
  out.distance_cap = r.get<std::uint32_t>();
  if (!r.at_end()) throw FormatError(path.string() + ": trailing bytes");
  out.table = ReferenceTable(count, std::move(entries));
  return out;
}

}  // namespace vlp::vertical
