#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vlp/rng.hpp"
#include "vlp/types.hpp"

namespace vlp::model {

enum class ModelKind : std::uint8_t { TransE = 0, DistMult = 1, ComplEx = 2, RotatE = 3 };
enum class SpaceKind : std::uint8_t { Real = 0, Complex = 1 };
enum class Norm : std::uint8_t { L2, L1 };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::TransE: return "transe";
    case ModelKind::DistMult: return "distmult";
    case ModelKind::ComplEx: return "complex";
    case ModelKind::RotatE: return "rotate";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "transe") return ModelKind::TransE;
  if (s == "distmult") return ModelKind::DistMult;
  if (s == "complex") return ModelKind::ComplEx;
  if (s == "rotate") return ModelKind::RotatE;
  throw ConfigError("unknown model '" + std::string(s) + "'");
}

inline SpaceKind space_of(ModelKind k) {
  return (k == ModelKind::ComplEx || k == ModelKind::RotatE) ? SpaceKind::Complex : SpaceKind::Real;
}

// Distance-based similarity (-||q - k||) versus dot-product similarity.
inline bool is_distance_model(ModelKind k) { return k == ModelKind::TransE || k == ModelKind::RotatE; }

// A model kind together with the norm used by distance models.
struct GsfModel {
  ModelKind kind = ModelKind::RotatE;
  Norm norm = Norm::L2;

  GsfModel() = default;
  GsfModel(ModelKind k, Norm n = Norm::L2) : kind(k), norm(n) {}  // NOLINT(implicit)
};

// Relation operators are diagonal (or identity), so d_r == d_e. Complex
// vectors are stored as split blocks [re_0..re_{d-1}, im_0..im_{d-1}];
// `width()` is the realified length d_k.
struct EmbeddingSpace {
  SpaceKind kind = SpaceKind::Real;
  std::uint32_t dim = 0;

  std::size_t width() const noexcept { return kind == SpaceKind::Complex ? 2 * std::size_t{dim} : dim; }
  friend bool operator==(const EmbeddingSpace&, const EmbeddingSpace&) = default;
};

// Per-relation storage width: phases for RotatE, split complex for ComplEx.
inline std::size_t relation_width(ModelKind k, std::uint32_t dim) {
  return k == ModelKind::ComplEx ? 2 * std::size_t{dim} : dim;
}

// Shared aggregation matrices, row-major in one flat buffer:
//   node [hidden x width], edge [hidden x width], agg [width x (hidden + width)].
template <class T>
struct AggregatorParams {
  std::size_t hidden = 0;
  std::size_t width = 0;
  std::vector<T> values;

  AggregatorParams() = default;
  AggregatorParams(std::size_t hidden_dim, std::size_t width_dim)
      : hidden(hidden_dim), width(width_dim), values(parameter_count(hidden_dim, width_dim), T{}) {}

  static std::size_t parameter_count(std::size_t hidden_dim, std::size_t width_dim) {
    return 2 * hidden_dim * width_dim + width_dim * (hidden_dim + width_dim);
  }

  std::size_t node_offset() const noexcept { return 0; }
  std::size_t edge_offset() const noexcept { return hidden * width; }
  std::size_t agg_offset() const noexcept { return 2 * hidden * width; }
  std::size_t agg_cols() const noexcept { return hidden + width; }

  std::span<T> node() { return std::span(values).subspan(node_offset(), hidden * width); }
  std::span<T> edge() { return std::span(values).subspan(edge_offset(), hidden * width); }
  std::span<T> agg() { return std::span(values).subspan(agg_offset(), width * agg_cols()); }
  std::span<const T> node() const { return std::span(values).subspan(node_offset(), hidden * width); }
  std::span<const T> edge() const { return std::span(values).subspan(edge_offset(), hidden * width); }
  std::span<const T> agg() const { return std::span(values).subspan(agg_offset(), width * agg_cols()); }

  friend bool operator==(const AggregatorParams&, const AggregatorParams&) = default;
};

template <class T>
struct ParameterStore {
  ModelKind kind = ModelKind::RotatE;
  EmbeddingSpace space;
  std::size_t num_entities = 0;
  std::size_t num_relations = 0;
  std::vector<T> entities;   // num_entities x space.width()
  std::vector<T> relations;  // num_relations x relation_width(kind, dim)
  AggregatorParams<T> aggregator;

  std::size_t entity_width() const noexcept { return space.width(); }
  std::size_t rel_width() const noexcept { return relation_width(kind, space.dim); }

  std::span<const T> entity(EntityId e) const {
    return std::span(entities).subspan(std::size_t{e} * entity_width(), entity_width());
  }
  std::span<T> entity(EntityId e) {
    return std::span(entities).subspan(std::size_t{e} * entity_width(), entity_width());
  }
  std::span<const T> relation(RelationId r) const {
    return std::span(relations).subspan(std::size_t{r} * rel_width(), rel_width());
  }
  std::span<T> relation(RelationId r) {
    return std::span(relations).subspan(std::size_t{r} * rel_width(), rel_width());
  }

  template <class U>
  ParameterStore<U> cast() const {
    ParameterStore<U> out;
    out.kind = kind;
    out.space = space;
    out.num_entities = num_entities;
    out.num_relations = num_relations;
    out.entities.assign(entities.begin(), entities.end());
    out.relations.assign(relations.begin(), relations.end());
    out.aggregator.hidden = aggregator.hidden;
    out.aggregator.width = aggregator.width;
    out.aggregator.values.assign(aggregator.values.begin(), aggregator.values.end());
    return out;
  }

  friend bool operator==(const ParameterStore&, const ParameterStore&) = default;
};

inline constexpr double kDefaultGamma = 6.0;

// Uniform initialization fully determined by `seed`. Distance models draw
// from [-(gamma+2)/d, (gamma+2)/d], others from [-6/sqrt(d), 6/sqrt(d)];
// RotatE phases from [-pi, pi]; aggregator matrices Glorot-uniform.
template <class T>
ParameterStore<T> init_parameters(ModelKind kind, std::uint32_t dim, std::size_t num_entities,
                                  std::size_t num_relations, std::uint64_t seed,
                                  double gamma = kDefaultGamma, std::size_t hidden = 0) {
  if (dim == 0) throw Error("embedding dimension must be positive");
  ParameterStore<T> s;
  s.kind = kind;
  s.space = {space_of(kind), dim};
  s.num_entities = num_entities;
  s.num_relations = num_relations;
  const double bound = is_distance_model(kind) ? (gamma + 2.0) / dim : 6.0 / std::sqrt(double(dim));
  Rng rng(seed);
  s.entities.resize(num_entities * s.entity_width());
  for (auto& v : s.entities) v = static_cast<T>(rng.uniform(-bound, bound));
  s.relations.resize(num_relations * s.rel_width());
  const double rel_bound = kind == ModelKind::RotatE ? std::numbers::pi : bound;
  for (auto& v : s.relations) v = static_cast<T>(rng.uniform(-rel_bound, rel_bound));

  const std::size_t width = s.entity_width();
  s.aggregator = AggregatorParams<T>(hidden == 0 ? width : hidden, width);
  auto glorot = [&](std::span<T> m, double fan_in, double fan_out) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : m) v = static_cast<T>(rng.uniform(-a, a));
  };
  const double h = double(s.aggregator.hidden), w = double(width);
  glorot(s.aggregator.node(), w, h);
  glorot(s.aggregator.edge(), w, h);
  glorot(s.aggregator.agg(), h + w, w);
  return s;
}

}  // namespace vlp::model
