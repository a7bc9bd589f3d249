#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "vlp/model/embedding.hpp"
#include "vlp/model/gradients.hpp"
#include "vlp/model/gsf.hpp"
#include "vlp/vertical/reference.hpp"

namespace vlp::vertical {

using model::GradientBuffer;
using model::ParameterStore;

// s = q - q_i = W_{r,1} (h - h_i), realified.
template <class T>
std::vector<double> edge_similarity(const ParameterStore<T>& s, EntityId h, EntityId h_i, RelationId r) {
  auto q = model::query_embed(s, h, r);
  const auto qi = model::query_embed(s, h_i, r);
  for (std::size_t i = 0; i < q.size(); ++i) q[i] -= qi[i];
  return q;
}

struct ReferenceEmbedding {
  std::vector<double> answer;  // k_i
  std::vector<double> edge;    // s_i
};

struct VerticalOutput {
  std::vector<double> t_prime;  // width
  std::vector<double> t_n;      // hidden; zero when there are no references
};

// t_N = mean_i(W_node k_i + W_edge s_i); t' = tanh(W_agg [t_N; q]).
template <class T>
VerticalOutput aggregate(const model::AggregatorParams<T>& a, std::span<const double> q,
                         std::span<const ReferenceEmbedding> refs) {
  const std::size_t hd = a.hidden, w = a.width;
  VerticalOutput out{std::vector<double>(w, 0.0), std::vector<double>(hd, 0.0)};
  const auto node = a.node();
  const auto edge = a.edge();
  for (const auto& ref : refs) {
    for (std::size_t i = 0; i < hd; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < w; ++j)
        acc += double(node[i * w + j]) * ref.answer[j] + double(edge[i * w + j]) * ref.edge[j];
      out.t_n[i] += acc;
    }
  }
  if (!refs.empty()) {
    const double inv = 1.0 / static_cast<double>(refs.size());
    for (auto& v : out.t_n) v *= inv;
  }
  const auto agg = a.agg();
  const std::size_t cols = a.agg_cols();
  for (std::size_t i = 0; i < w; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < hd; ++j) z += double(agg[i * cols + j]) * out.t_n[j];
    for (std::size_t j = 0; j < w; ++j) z += double(agg[i * cols + hd + j]) * q[j];
    out.t_prime[i] = std::tanh(z);
  }
  return out;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Cosine similarity; 0 when either vector has zero norm.
inline double score_fc(std::span<const double> t_prime, std::span<const double> t) {
  if (t_prime.size() != t.size()) throw Error("score_fc: dimension mismatch");
  const double na = std::sqrt(dot(t_prime, t_prime));
  const double nb = std::sqrt(dot(t, t));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(t_prime, t) / (na * nb);
}

// Accumulates upstream * d cos(a, b) into da and db.
inline void score_fc_backward(std::span<const double> a, std::span<const double> b, double upstream,
                              std::span<double> da, std::span<double> db) {
  if (upstream == 0.0) return;
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) return;
  const double c = dot(a, b) / (na * nb);
  const double inv = 1.0 / (na * nb);
  for (std::size_t i = 0; i < a.size(); ++i) {
    da[i] += upstream * (b[i] * inv - c * a[i] / (na * na));
    db[i] += upstream * (a[i] * inv - c * b[i] / (nb * nb));
  }
}

// Forward pass of the vertical branch for one query, kept for backprop.
struct VerticalForward {
  EntityId head = 0;
  RelationId relation = 0;
  std::vector<Reference> refs;
  std::vector<double> q;
  std::vector<ReferenceEmbedding> ref_embeddings;
  VerticalOutput out;

  std::span<const double> t_prime() const { return out.t_prime; }
};

template <class T>
VerticalForward forward_vertical(const ParameterStore<T>& s, EntityId h, RelationId r, std::vector<Reference> refs) {
  VerticalForward f;
  f.head = h;
  f.relation = r;
  f.refs = std::move(refs);
  f.q = model::query_embed(s, h, r);
  f.ref_embeddings.reserve(f.refs.size());
  std::vector<double> qi(f.q.size());
  for (const auto& ref : f.refs) {
    model::query_embed(s, ref.head, r, std::span(qi));
    ReferenceEmbedding e{model::answer_embed(s, ref.tail, r), f.q};
    for (std::size_t i = 0; i < qi.size(); ++i) e.edge[i] -= qi[i];
    f.ref_embeddings.push_back(std::move(e));
  }
  f.out = aggregate(s.aggregator, f.q, f.ref_embeddings);
  return f;
}

// Backpropagates d(loss)/d(t') through tanh, the aggregation matrices, the
// reference mean and the GSF query maps.
template <class T>
void backward_vertical(const ParameterStore<T>& s, const VerticalForward& f, std::span<const double> d_tprime,
                       GradientBuffer& g) {
  const auto& a = s.aggregator;
  const std::size_t hd = a.hidden, w = a.width, cols = a.agg_cols();
  std::vector<double> dz(w);
  bool any = false;
  for (std::size_t i = 0; i < w; ++i) {
    dz[i] = d_tprime[i] * (1.0 - f.out.t_prime[i] * f.out.t_prime[i]);
    any = any || dz[i] != 0.0;
  }
  if (!any) return;

  auto ga = g.aggregator();
  const auto agg = a.agg();
  std::vector<double> dt_n(hd, 0.0), dq(w, 0.0);
  for (std::size_t i = 0; i < w; ++i) {
    const std::size_t row = a.agg_offset() + i * cols;
    for (std::size_t j = 0; j < hd; ++j) {
      ga[row + j] += dz[i] * f.out.t_n[j];
      dt_n[j] += double(agg[i * cols + j]) * dz[i];
    }
    for (std::size_t j = 0; j < w; ++j) {
      ga[row + hd + j] += dz[i] * f.q[j];
      dq[j] += double(agg[i * cols + hd + j]) * dz[i];
    }
  }

  if (!f.refs.empty()) {
    const double inv = 1.0 / static_cast<double>(f.refs.size());
    for (auto& v : dt_n) v *= inv;
    const auto node = a.node();
    const auto edge = a.edge();
    std::vector<double> dk(w), ds(w);
    for (std::size_t r = 0; r < f.refs.size(); ++r) {
      const auto& e = f.ref_embeddings[r];
      std::fill(dk.begin(), dk.end(), 0.0);
      std::fill(ds.begin(), ds.end(), 0.0);
      for (std::size_t i = 0; i < hd; ++i) {
        const double u = dt_n[i];
        if (u == 0.0) continue;
        for (std::size_t j = 0; j < w; ++j) {
          ga[a.node_offset() + i * w + j] += u * e.answer[j];
          ga[a.edge_offset() + i * w + j] += u * e.edge[j];
          dk[j] += double(node[i * w + j]) * u;
          ds[j] += double(edge[i * w + j]) * u;
        }
      }
      auto gt = g.entity_row(f.refs[r].tail);
      for (std::size_t j = 0; j < w; ++j) gt[j] += dk[j];
      for (std::size_t j = 0; j < w; ++j) dq[j] += ds[j];
      for (auto& v : ds) v = -v;
      model::query_backward(s, f.refs[r].head, f.relation, ds, g);
    }
  }
  model::query_backward(s, f.head, f.relation, dq, g);
}

// Cosine of t' against every entity row.
template <class T>
std::vector<double> score_fc_all(const ParameterStore<T>& s, const VerticalForward& f) {
  std::vector<double> out(s.num_entities);
  std::vector<double> scratch;
  for (EntityId e = 0; e < s.num_entities; ++e) out[e] = score_fc(f.t_prime(), model::as_double(s.entity(e), scratch));
  return out;
}

template <class T>
std::vector<double> score_fc_all(const ParameterStore<T>& s, const ReferenceTable& refs, EntityId h, RelationId r,
                                 std::size_t count) {
  return score_fc_all(s, forward_vertical(s, h, r, refs.lookup(h, r, std::nullopt, count)));
}

// f = f_c + lambda * f_g.
template <class T>
double score_f(const ParameterStore<T>& s, const model::GsfModel& m, const VerticalForward& f, EntityId t,
               double lambda) {
  std::vector<double> scratch;
  const auto te = model::as_double(s.entity(t), scratch);
  return score_fc(f.t_prime(), te) + lambda * model::similarity(m, f.q, te);
}

template <class T>
double score_f(const ParameterStore<T>& s, const model::GsfModel& m, const ReferenceTable& refs, EntityId h,
               RelationId r, EntityId t, double lambda, std::size_t count) {
  return score_f(s, m, forward_vertical(s, h, r, refs.lookup(h, r, std::nullopt, count)), t, lambda);
}

}  // namespace vlp::vertical
