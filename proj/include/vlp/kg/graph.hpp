#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vlp/binary_io.hpp"
#include "vlp/types.hpp"

namespace vlp::kg {

// Bijective name <-> id maps. Ids are dense and follow lexicographic name order.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> entities, std::vector<std::string> relations)
      : entity_names_(std::move(entities)), relation_names_(std::move(relations)) {
    std::sort(entity_names_.begin(), entity_names_.end());
    entity_names_.erase(std::unique(entity_names_.begin(), entity_names_.end()), entity_names_.end());
    std::sort(relation_names_.begin(), relation_names_.end());
    relation_names_.erase(std::unique(relation_names_.begin(), relation_names_.end()),
                          relation_names_.end());
    for (std::size_t i = 0; i < entity_names_.size(); ++i)
      entity_ids_.emplace(entity_names_[i], static_cast<EntityId>(i));
    for (std::size_t i = 0; i < relation_names_.size(); ++i)
      relation_ids_.emplace(relation_names_[i], static_cast<RelationId>(i));
  }

  std::size_t num_entities() const noexcept { return entity_names_.size(); }
  std::size_t num_relations() const noexcept { return relation_names_.size(); }
  const std::string& entity_name(EntityId id) const { return entity_names_.at(id); }
  const std::string& relation_name(RelationId id) const { return relation_names_.at(id); }
  const std::vector<std::string>& entity_names() const noexcept { return entity_names_; }
  const std::vector<std::string>& relation_names() const noexcept { return relation_names_; }

  std::optional<EntityId> entity_id(const std::string& name) const {
    auto it = entity_ids_.find(name);
    if (it == entity_ids_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<RelationId> relation_id(const std::string& name) const {
    auto it = relation_ids_.find(name);
    if (it == relation_ids_.end()) return std::nullopt;
    return it->second;
  }

  // Content hash of both name lists; identifies a vocabulary in checkpoints.
  std::uint64_t fingerprint() const {
    std::uint64_t h = io::kFnvOffset;
    for (const auto& n : entity_names_) h = io::fnv1a(n + '\n', h);
    h = io::fnv1a("\x1e", h);
    for (const auto& n : relation_names_) h = io::fnv1a(n + '\n', h);
    return h;
  }

 private:
  std::vector<std::string> entity_names_;
  std::vector<std::string> relation_names_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::unordered_map<std::string, RelationId> relation_ids_;
};

enum class Direction : std::uint8_t { Outgoing, Incoming };

struct Neighbor {
  RelationId relation;
  EntityId entity;
  Direction direction;
};

// Immutable triple store. Adjacency and the per-relation index are built over
// the training split only.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  KnowledgeGraph(Vocabulary vocab, std::vector<Triple> train, std::vector<Triple> valid,
                 std::vector<Triple> test)
      : vocab_(std::move(vocab)),
        num_entities_(vocab_.num_entities()),
        num_relations_(vocab_.num_relations()),
        base_relations_(vocab_.num_relations()),
        train_(std::move(train)),
        valid_(std::move(valid)),
        test_(std::move(test)) {
    finalize();
  }

  // Builds a graph over anonymous ids ("e0", "r0", ...); for tests and synthetic data.
  static KnowledgeGraph from_triples(std::size_t num_entities, std::size_t num_relations,
                                     std::vector<Triple> train, std::vector<Triple> valid = {},
                                     std::vector<Triple> test = {}) {
    KnowledgeGraph g;
    g.num_entities_ = num_entities;
    g.num_relations_ = num_relations;
    g.base_relations_ = num_relations;
    g.train_ = std::move(train);
    g.valid_ = std::move(valid);
    g.test_ = std::move(test);
    for (const auto* split : {&g.train_, &g.valid_, &g.test_})
      for (const auto& t : *split)
        if (t.head >= num_entities || t.tail >= num_entities || t.relation >= num_relations)
          throw Error("triple id out of range");
    g.finalize();
    return g;
  }

  const Vocabulary& vocab() const noexcept { return vocab_; }
  std::size_t num_entities() const noexcept { return num_entities_; }
  std::size_t num_relations() const noexcept { return num_relations_; }
  // Relation count before reciprocal augmentation.
  std::size_t num_base_relations() const noexcept { return base_relations_; }
  bool augmented() const noexcept { return augmented_; }

  const std::vector<Triple>& train() const noexcept { return train_; }
  const std::vector<Triple>& valid() const noexcept { return valid_; }
  const std::vector<Triple>& test() const noexcept { return test_; }

  const std::vector<Neighbor>& neighbors(EntityId e) const { return adjacency_.at(e); }
  // Training (head, tail) pairs for a relation.
  const std::vector<std::pair<EntityId, EntityId>>& relation_pairs(RelationId r) const {
    return relation_pairs_.at(r);
  }
  // Number of training triples whose head is `e`.
  std::size_t head_frequency(EntityId e) const { return head_frequency_.at(e); }

  // Names of valid/test entities or relations never seen in training.
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  // Relation id of the reciprocal direction.
  RelationId reciprocal(RelationId r) const {
    if (!augmented_) throw Error("graph is not augmented");
    return r < base_relations_ ? static_cast<RelationId>(r + base_relations_)
                               : static_cast<RelationId>(r - base_relations_);
  }

  std::string relation_label(RelationId r) const {
    const auto base = static_cast<RelationId>(r % base_relations_);
    std::string name = vocab_.num_relations() ? vocab_.relation_name(base) : "r" + std::to_string(base);
    return r >= base_relations_ ? name + "_reverse" : name;
  }
  std::string entity_label(EntityId e) const {
    return vocab_.num_entities() ? vocab_.entity_name(e) : "e" + std::to_string(e);
  }

  KnowledgeGraph augment_reciprocal() const {
    if (augmented_) throw Error("graph already augmented with reciprocal relations");
    KnowledgeGraph g = *this;
    const auto shift = static_cast<RelationId>(base_relations_);
    auto mirror = [shift](std::vector<Triple>& split) {
      const std::size_t n = split.size();
      split.reserve(2 * n);
      for (std::size_t i = 0; i < n; ++i) {
        const Triple t = split[i];
        split.push_back({t.tail, static_cast<RelationId>(t.relation + shift), t.head});
      }
    };
    mirror(g.train_);
    mirror(g.valid_);
    mirror(g.test_);
    g.num_relations_ = 2 * base_relations_;
    g.augmented_ = true;
    g.finalize();
    return g;
  }

 private:
  friend KnowledgeGraph load_dataset(const std::filesystem::path&);

  void finalize() {
    for (auto* split : {&train_, &valid_, &test_}) {
      std::sort(split->begin(), split->end());
      split->erase(std::unique(split->begin(), split->end()), split->end());
    }
    adjacency_.assign(num_entities_, {});
    relation_pairs_.assign(num_relations_, {});
    head_frequency_.assign(num_entities_, 0);
    for (const auto& t : train_) {
      adjacency_[t.head].push_back({t.relation, t.tail, Direction::Outgoing});
      adjacency_[t.tail].push_back({t.relation, t.head, Direction::Incoming});
      relation_pairs_[t.relation].emplace_back(t.head, t.tail);
      ++head_frequency_[t.head];
    }
  }

  Vocabulary vocab_;
  std::size_t num_entities_ = 0;
  std::size_t num_relations_ = 0;
  std::size_t base_relations_ = 0;
  bool augmented_ = false;
  std::vector<Triple> train_, valid_, test_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<std::vector<std::pair<EntityId, EntityId>>> relation_pairs_;
  std::vector<std::size_t> head_frequency_;
  std::vector<std::string> warnings_;
};

namespace detail {

struct RawTriple {
  std::string head, relation, tail;
};

inline std::vector<RawTriple> read_triples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetNotFound("missing dataset file: " + path.string());
  std::vector<RawTriple> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3)
      throw ParseError(path.string(), lineno,
                       "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    out.push_back({std::move(fields[0]), std::move(fields[1]), std::move(fields[2])});
  }
  return out;
}

}  // namespace detail

// Reads train.txt / valid.txt / test.txt (head TAB relation TAB tail) from `dir`.
inline KnowledgeGraph load_dataset(const std::filesystem::path& dir) {
  const auto train_raw = detail::read_triples(dir / "train.txt");
  if (train_raw.empty()) throw DatasetNotFound("empty training file: " + (dir / "train.txt").string());
  const auto valid_raw = detail::read_triples(dir / "valid.txt");
  const auto test_raw = detail::read_triples(dir / "test.txt");

  std::vector<std::string> entities, relations;
  for (const auto* split : {&train_raw, &valid_raw, &test_raw})
    for (const auto& t : *split) {
      entities.push_back(t.head);
      entities.push_back(t.tail);
      relations.push_back(t.relation);
    }
  Vocabulary vocab(std::move(entities), std::move(relations));

  std::set<std::string> seen_entities, seen_relations;
  for (const auto& t : train_raw) {
    seen_entities.insert(t.head);
    seen_entities.insert(t.tail);
    seen_relations.insert(t.relation);
  }

  std::vector<std::string> warnings;
  std::set<std::string> warned;
  auto convert = [&](const std::vector<detail::RawTriple>& raw, bool check) {
    std::vector<Triple> out;
    out.reserve(raw.size());
    for (const auto& t : raw) {
      if (check) {
        for (const auto* e : {&t.head, &t.tail})
          if (!seen_entities.count(*e) && warned.insert("entity " + *e).second)
            warnings.push_back("entity not in train: " + *e);
        if (!seen_relations.count(t.relation) && warned.insert("relation " + t.relation).second)
          warnings.push_back("relation not in train: " + t.relation);
      }
      out.push_back({*vocab.entity_id(t.head), *vocab.relation_id(t.relation), *vocab.entity_id(t.tail)});
    }
    return out;
  };
  auto train = convert(train_raw, false);
  auto valid = convert(valid_raw, true);
  auto test = convert(test_raw, true);
  KnowledgeGraph g(std::move(vocab), std::move(train), std::move(valid), std::move(test));
  g.warnings_ = std::move(warnings);
  return g;
}

inline KnowledgeGraph augment_reciprocal(const KnowledgeGraph& g) { return g.augment_reciprocal(); }

// Known tails per (head, relation) over train, valid and test.
class FilterIndex {
 public:
  FilterIndex() = default;
  explicit FilterIndex(const KnowledgeGraph& g) {
    for (const auto* split : {&g.train(), &g.valid(), &g.test()})
      for (const auto& t : *split) tails_[key(t.head, t.relation)].push_back(t.tail);
    for (auto& [k, v] : tails_) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
  }

  std::span<const EntityId> tails(EntityId head, RelationId relation) const {
    auto it = tails_.find(key(head, relation));
    if (it == tails_.end()) return {};
    return it->second;
  }

  bool contains(EntityId head, RelationId relation, EntityId tail) const {
    auto t = tails(head, relation);
    return std::binary_search(t.begin(), t.end(), tail);
  }

 private:
  static std::uint64_t key(EntityId h, RelationId r) { return (std::uint64_t{h} << 32) | r; }
  std::unordered_map<std::uint64_t, std::vector<EntityId>> tails_;
};

inline std::vector<EntityId> filter_candidates(const FilterIndex& index, EntityId head, RelationId relation) {
  auto t = index.tails(head, relation);
  return {t.begin(), t.end()};
}

enum class MappingProperty : std::uint8_t { OneToOne, OneToMany, ManyToOne, ManyToMany };

inline const char* to_string(MappingProperty m) {
  switch (m) {
    case MappingProperty::OneToOne: return "1-1";
    case MappingProperty::OneToMany: return "1-N";
    case MappingProperty::ManyToOne: return "N-1";
    case MappingProperty::ManyToMany: return "N-N";
  }
  return "?";
}

inline constexpr double kMappingThreshold = 1.5;

struct MappingStats {
  double tails_per_head = 0.0;
  double heads_per_tail = 0.0;
};

inline MappingProperty classify_mapping(MappingStats s) {
  const bool many_tails = s.tails_per_head >= kMappingThreshold;
  const bool many_heads = s.heads_per_tail >= kMappingThreshold;
  if (many_tails && many_heads) return MappingProperty::ManyToMany;
  if (many_tails) return MappingProperty::OneToMany;
  if (many_heads) return MappingProperty::ManyToOne;
  return MappingProperty::OneToOne;
}

inline MappingProperty transpose(MappingProperty m) {
  if (m == MappingProperty::OneToMany) return MappingProperty::ManyToOne;
  if (m == MappingProperty::ManyToOne) return MappingProperty::OneToMany;
  return m;
}

// Relation mapping property per relation id, from training triples.
inline std::vector<MappingProperty> rmp_classify(const KnowledgeGraph& g) {
  std::vector<std::optional<MappingProperty>> found(g.num_relations());
  for (RelationId r = 0; r < g.num_relations(); ++r) {
    const auto& pairs = g.relation_pairs(r);
    if (pairs.empty()) continue;
    std::set<EntityId> heads, tails;
    for (auto [h, t] : pairs) {
      heads.insert(h);
      tails.insert(t);
    }
    const double n = static_cast<double>(pairs.size());
    found[r] = classify_mapping({n / static_cast<double>(heads.size()), n / static_cast<double>(tails.size())});
  }
  std::vector<MappingProperty> out(g.num_relations(), MappingProperty::OneToOne);
  for (RelationId r = 0; r < g.num_relations(); ++r) {
    if (found[r]) {
      out[r] = *found[r];
    } else if (g.augmented() && found[g.reciprocal(r)]) {
      out[r] = transpose(*found[g.reciprocal(r)]);
    }
  }
  return out;
}

}  // namespace vlp::kg
