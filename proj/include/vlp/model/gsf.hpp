#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "vlp/model/embedding.hpp"
#include "vlp/model/gradients.hpp"

// Generalized score function f_g(h, r, t) = g(W1 h + b, W2 t) for the
// diagonal instantiations. All arithmetic is done in double on realified
// vectors regardless of the storage type.
namespace vlp::model {

// q = W_{r,1} h + b_r, written into `q` (length d_k).
template <class T>
void query_embed(const ParameterStore<T>& s, EntityId h, RelationId r, std::span<double> q) {
  const auto he = s.entity(h);
  const auto re = s.relation(r);
  const std::size_t d = s.space.dim;
  switch (s.kind) {
    case ModelKind::TransE:
      for (std::size_t i = 0; i < d; ++i) q[i] = double(he[i]) + double(re[i]);
      break;
    case ModelKind::DistMult:
      for (std::size_t i = 0; i < d; ++i) q[i] = double(he[i]) * double(re[i]);
      break;
    case ModelKind::ComplEx:
      for (std::size_t i = 0; i < d; ++i) {
        const double a = he[i], b = he[d + i], c = re[i], e = re[d + i];
        q[i] = a * c - b * e;
        q[d + i] = a * e + b * c;
      }
      break;
    case ModelKind::RotatE:
      for (std::size_t i = 0; i < d; ++i) {
        const double a = he[i], b = he[d + i];
        const double c = std::cos(double(re[i])), sn = std::sin(double(re[i]));
        q[i] = a * c - b * sn;
        q[d + i] = a * sn + b * c;
      }
      break;
  }
}

template <class T>
std::vector<double> query_embed(const ParameterStore<T>& s, EntityId h, RelationId r) {
  std::vector<double> q(s.entity_width());
  query_embed(s, h, r, std::span(q));
  return q;
}

// k = W_{r,2} t; the identity for every shipped model.
template <class T>
std::vector<double> answer_embed(const ParameterStore<T>& s, EntityId t, RelationId /*r*/) {
  const auto te = s.entity(t);
  return {te.begin(), te.end()};
}

// Accumulates dq/d(h, r) . dq into the h and r rows of `g`.
template <class T>
void query_backward(const ParameterStore<T>& s, EntityId h, RelationId r, std::span<const double> dq,
                    GradientBuffer& g) {
  const auto he = s.entity(h);
  const auto re = s.relation(r);
  const std::size_t d = s.space.dim;
  auto gh = g.entity_row(h);
  auto gr = g.relation_row(r);
  switch (s.kind) {
    case ModelKind::TransE:
      for (std::size_t i = 0; i < d; ++i) {
        gh[i] += dq[i];
        gr[i] += dq[i];
      }
      break;
    case ModelKind::DistMult:
      for (std::size_t i = 0; i < d; ++i) {
        gh[i] += dq[i] * double(re[i]);
        gr[i] += dq[i] * double(he[i]);
      }
      break;
    case ModelKind::ComplEx:
      for (std::size_t i = 0; i < d; ++i) {
        const double a = he[i], b = he[d + i], c = re[i], e = re[d + i];
        const double u = dq[i], v = dq[d + i];
        gh[i] += u * c + v * e;
        gh[d + i] += -u * e + v * c;
        gr[i] += u * a + v * b;
        gr[d + i] += -u * b + v * a;
      }
      break;
    case ModelKind::RotatE:
      for (std::size_t i = 0; i < d; ++i) {
        const double a = he[i], b = he[d + i];
        const double c = std::cos(double(re[i])), sn = std::sin(double(re[i]));
        const double u = dq[i], v = dq[d + i];
        gh[i] += u * c + v * sn;
        gh[d + i] += -u * sn + v * c;
        gr[i] += u * (-a * sn - b * c) + v * (a * c - b * sn);
      }
      break;
  }
}

// g(q, k): -||q - k|| for distance models, realified dot product otherwise
// (which is Re(q^T conj(k)) for complex vectors).
inline double similarity(const GsfModel& m, std::span<const double> q, std::span<const double> k) {
  if (q.size() != k.size()) throw Error("similarity: dimension mismatch");
  double acc = 0.0;
  if (!is_distance_model(m.kind)) {
    for (std::size_t i = 0; i < q.size(); ++i) acc += q[i] * k[i];
    return acc;
  }
  if (m.norm == Norm::L1) {
    for (std::size_t i = 0; i < q.size(); ++i) acc += std::abs(q[i] - k[i]);
    return -acc;
  }
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double diff = q[i] - k[i];
    acc += diff * diff;
  }
  return -std::sqrt(acc);
}

// Accumulates upstream * dg/dq and upstream * dg/dk. The gradient of the
// distance at q == k is taken as zero.
inline void similarity_backward(const GsfModel& m, std::span<const double> q, std::span<const double> k,
                                double upstream, std::span<double> dq, std::span<double> dk) {
  if (upstream == 0.0) return;
  if (!is_distance_model(m.kind)) {
    for (std::size_t i = 0; i < q.size(); ++i) {
      dq[i] += upstream * k[i];
      dk[i] += upstream * q[i];
    }
    return;
  }
  if (m.norm == Norm::L1) {
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double diff = q[i] - k[i];
      const double sgn = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
      dq[i] -= upstream * sgn;
      dk[i] += upstream * sgn;
    }
    return;
  }
  const double dist = -similarity(m, q, k);
  if (dist == 0.0) return;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double g = upstream * (q[i] - k[i]) / dist;
    dq[i] -= g;
    dk[i] += g;
  }
}

template <class T>
std::span<const double> as_double(std::span<const T> v, std::vector<double>& scratch) {
  if constexpr (std::is_same_v<T, double>) {
    return v;
  } else {
    scratch.assign(v.begin(), v.end());
    return scratch;
  }
}

template <class T>
double score_fg(const ParameterStore<T>& s, const GsfModel& m, EntityId h, RelationId r, EntityId t) {
  const auto q = query_embed(s, h, r);
  std::vector<double> scratch;
  return similarity(m, q, as_double(s.entity(t), scratch));
}

// f_g(h, r, e) for every entity e, computing the query once.
template <class T>
std::vector<double> score_fg_all(const ParameterStore<T>& s, const GsfModel& m, EntityId h, RelationId r) {
  const auto q = query_embed(s, h, r);
  std::vector<double> out(s.num_entities);
  std::vector<double> scratch;
  for (EntityId e = 0; e < s.num_entities; ++e) out[e] = similarity(m, q, as_double(s.entity(e), scratch));
  return out;
}

// Accumulates upstream * d f_g(h, r, t) / d(params) into the h, r and t rows.
template <class T>
void grad_fg(const ParameterStore<T>& s, const GsfModel& m, EntityId h, RelationId r, EntityId t,
             double upstream, GradientBuffer& g) {
  if (upstream == 0.0) return;
  const auto q = query_embed(s, h, r);
  std::vector<double> scratch;
  const auto k = as_double(s.entity(t), scratch);
  std::vector<double> dq(q.size(), 0.0), dk(q.size(), 0.0);
  similarity_backward(m, q, k, upstream, dq, dk);
  query_backward(s, h, r, dq, g);
  auto gt = g.entity_row(t);
  for (std::size_t i = 0; i < dk.size(); ++i) gt[i] += dk[i];
}

}  // namespace vlp::model
