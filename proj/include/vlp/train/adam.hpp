#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "vlp/model/embedding.hpp"
#include "vlp/model/gradients.hpp"

namespace vlp::train {

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

// Moments congruent with a ParameterStore. Updates are lazy: rows absent from
// a gradient keep their moments untouched.
template <class T>
struct AdamState {
  std::vector<T> entity_m, entity_v;
  std::vector<T> relation_m, relation_v;
  std::vector<T> aggregator_m, aggregator_v;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(const model::ParameterStore<T>& s)
      : entity_m(s.entities.size()),
        entity_v(s.entities.size()),
        relation_m(s.relations.size()),
        relation_v(s.relations.size()),
        aggregator_m(s.aggregator.values.size()),
        aggregator_v(s.aggregator.values.size()) {}

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

namespace detail {

template <class T>
void adam_block(T* param, T* m, T* v, const double* grad, std::size_t n, double lr, double c1, double c2) {
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    const double mi = kAdamBeta1 * double(m[i]) + (1.0 - kAdamBeta1) * g;
    const double vi = kAdamBeta2 * double(v[i]) + (1.0 - kAdamBeta2) * g * g;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    param[i] = static_cast<T>(double(param[i]) - lr * (mi / c1) / (std::sqrt(vi / c2) + kAdamEpsilon));
  }
}

}  // namespace detail

// One bias-corrected Adam step over the touched rows (and, if requested, the
// aggregator matrices).
template <class T>
void adam_update(model::ParameterStore<T>& s, AdamState<T>& st, const model::GradientBuffer& g, double lr,
                 bool update_aggregator) {
  ++st.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(st.step));
  const std::size_t ew = s.entity_width();
  for (EntityId e : g.touched_entities()) {
    const std::size_t off = std::size_t{e} * ew;
    detail::adam_block(s.entities.data() + off, st.entity_m.data() + off, st.entity_v.data() + off,
                       g.entities().data() + off, ew, lr, c1, c2);
  }
  const std::size_t rw = s.rel_width();
  for (RelationId r : g.touched_relations()) {
    const std::size_t off = std::size_t{r} * rw;
    detail::adam_block(s.relations.data() + off, st.relation_m.data() + off, st.relation_v.data() + off,
                       g.relations().data() + off, rw, lr, c1, c2);
  }
  if (update_aggregator && g.aggregator_touched()) {
    detail::adam_block(s.aggregator.values.data(), st.aggregator_m.data(), st.aggregator_v.data(),
                       g.aggregator_values().data(), s.aggregator.values.size(), lr, c1, c2);
  }
}

}  // namespace vlp::train
