#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "vlp/model/embedding.hpp"

namespace vlp::model {

// Dense 64-bit gradient accumulator congruent with a ParameterStore, plus the
// list of rows written since the last clear().
class GradientBuffer {
 public:
  GradientBuffer() = default;

  template <class T>
  explicit GradientBuffer(const ParameterStore<T>& s)
      : entity_width_(s.entity_width()),
        relation_width_(s.rel_width()),
        entities_(s.entities.size(), 0.0),
        relations_(s.relations.size(), 0.0),
        aggregator_(s.aggregator.values.size(), 0.0),
        entity_touched_(s.num_entities, 0),
        relation_touched_(s.num_relations, 0) {}

  std::span<double> entity_row(EntityId e) {
    if (!entity_touched_[e]) {
      entity_touched_[e] = 1;
      touched_entities_.push_back(e);
    }
    return std::span(entities_).subspan(std::size_t{e} * entity_width_, entity_width_);
  }

  std::span<double> relation_row(RelationId r) {
    if (!relation_touched_[r]) {
      relation_touched_[r] = 1;
      touched_relations_.push_back(r);
    }
    return std::span(relations_).subspan(std::size_t{r} * relation_width_, relation_width_);
  }

  std::span<double> aggregator() {
    aggregator_touched_ = true;
    return aggregator_;
  }

  std::span<const double> entity_row(EntityId e) const {
    return std::span(entities_).subspan(std::size_t{e} * entity_width_, entity_width_);
  }
  std::span<const double> relation_row(RelationId r) const {
    return std::span(relations_).subspan(std::size_t{r} * relation_width_, relation_width_);
  }

  const std::vector<double>& entities() const noexcept { return entities_; }
  const std::vector<double>& relations() const noexcept { return relations_; }
  const std::vector<double>& aggregator_values() const noexcept { return aggregator_; }

  const std::vector<EntityId>& touched_entities() const noexcept { return touched_entities_; }
  const std::vector<RelationId>& touched_relations() const noexcept { return touched_relations_; }
  bool aggregator_touched() const noexcept { return aggregator_touched_; }

  void scale(double factor) {
    for (EntityId e : touched_entities_)
      for (auto& v : std::span(entities_).subspan(std::size_t{e} * entity_width_, entity_width_)) v *= factor;
    for (RelationId r : touched_relations_)
      for (auto& v : std::span(relations_).subspan(std::size_t{r} * relation_width_, relation_width_)) v *= factor;
    if (aggregator_touched_)
      for (auto& v : aggregator_) v *= factor;
  }

  void clear() {
    for (EntityId e : touched_entities_) {
      std::fill_n(entities_.begin() + std::ptrdiff_t(std::size_t{e} * entity_width_), entity_width_, 0.0);
      entity_touched_[e] = 0;
    }
    for (RelationId r : touched_relations_) {
      std::fill_n(relations_.begin() + std::ptrdiff_t(std::size_t{r} * relation_width_), relation_width_, 0.0);
      relation_touched_[r] = 0;
    }
    if (aggregator_touched_) std::fill(aggregator_.begin(), aggregator_.end(), 0.0);
    touched_entities_.clear();
    touched_relations_.clear();
    aggregator_touched_ = false;
  }

 private:
  std::size_t entity_width_ = 0;
  std::size_t relation_width_ = 0;
  std::vector<double> entities_;
  std::vector<double> relations_;
  std::vector<double> aggregator_;
  std::vector<std::uint8_t> entity_touched_;
  std::vector<std::uint8_t> relation_touched_;
  std::vector<EntityId> touched_entities_;
  std::vector<RelationId> touched_relations_;
  bool aggregator_touched_ = false;
};

}  // namespace vlp::model
