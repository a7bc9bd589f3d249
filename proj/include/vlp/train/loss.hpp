#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "vlp/model/gsf.hpp"
#include "vlp/sampling/red.hpp"
#include "vlp/train/config.hpp"
#include "vlp/vertical/aggregate.hpp"

namespace vlp::train {

using model::GradientBuffer;
using model::ParameterStore;

// Everything the per-triple losses need besides the parameters.
struct Objective {
  model::GsfModel model;
  bool vertical = true;
  double lambda = 0.5;
  double gamma = model::kDefaultGamma;
  double alpha = 0.5;
  std::size_t ref_count = 8;
  sampling::SamplerConfig sampler;
  PostScore post_score = PostScore::Fg;

  static Objective from(const TrainConfig& c) {
    return {c.gsf(), c.vertical(), c.lambda, c.gamma, c.alpha, c.refs, c.sampler, c.postweight_score};
  }
};

// log(sigmoid(x)) without overflow.
inline double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// -sum_i w_i log sigma(-f_i - gamma) - log sigma(gamma + f_pos).
inline double negative_sampling_loss(double positive, std::span<const double> negatives,
                                     std::span<const double> weights, double gamma) {
  double loss = -log_sigmoid(gamma + positive);
  for (std::size_t i = 0; i < negatives.size(); ++i) loss -= weights[i] * log_sigmoid(-negatives[i] - gamma);
  return loss;
}

// Cross-entropy of softmax(scores) against the one-hot label `gold`.
// Writes d(loss)/d(scores) into `grad` when non-empty.
inline double softmax_cross_entropy(std::span<const double> scores, EntityId gold, std::span<double> grad) {
  const double mx = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double s : scores) z += std::exp(s - mx);
  const double log_z = mx + std::log(z);
  if (!grad.empty()) {
    for (std::size_t i = 0; i < scores.size(); ++i) grad[i] = std::exp(scores[i] - log_z);
    grad[gold] -= 1.0;
  }
  return log_z - scores[gold];
}

// The vertical branch for a training triple, with its own triple masked out.
template <class T>
vertical::VerticalForward training_forward(const ParameterStore<T>& s, const vertical::ReferenceTable& refs,
                                           const Objective& obj, const Triple& t) {
  return vertical::forward_vertical(s, t.head, t.relation, refs.lookup(t.head, t.relation, t.tail, obj.ref_count));
}

// L1 for one triple given its vertical forward pass. Accumulates
// scale * gradients into `g` (entity rows) and `d_tprime`.
template <class T>
double loss_l1(const ParameterStore<T>& s, const vertical::VerticalForward& f, EntityId gold, double scale,
               GradientBuffer* g, std::span<double> d_tprime) {
  const auto scores = vertical::score_fc_all(s, f);
  std::vector<double> dscore(g ? scores.size() : 0);
  const double loss = softmax_cross_entropy(scores, gold, dscore);
  if (g && scale != 0.0) {
    std::vector<double> scratch;
    for (EntityId e = 0; e < s.num_entities; ++e) {
      const double up = scale * dscore[e];
      if (up == 0.0) continue;
      vertical::score_fc_backward(f.t_prime(), model::as_double(s.entity(e), scratch), up, d_tprime,
                                  g->entity_row(e));
    }
  }
  return loss;
}

struct NegativeScores {
  double positive_fg = 0.0;
  double positive = 0.0;  // f used inside the loss
  std::vector<double> negatives_fg;
  std::vector<double> negatives;
};

template <class T>
NegativeScores score_candidates(const ParameterStore<T>& s, const Objective& obj, const std::vector<double>& q,
                                const vertical::VerticalForward* f, EntityId positive,
                                std::span<const EntityId> negatives) {
  NegativeScores out;
  std::vector<double> scratch;
  auto score = [&](EntityId e, double& fg) {
    const auto te = model::as_double(s.entity(e), scratch);
    fg = model::similarity(obj.model, q, te);
    return f ? vertical::score_fc(f->t_prime(), te) + obj.lambda * fg : fg;
  };
  out.positive = score(positive, out.positive_fg);
  out.negatives_fg.resize(negatives.size());
  out.negatives.resize(negatives.size());
  for (std::size_t i = 0; i < negatives.size(); ++i) out.negatives[i] = score(negatives[i], out.negatives_fg[i]);
  return out;
}

// Post-sampling weights for a scored candidate set (treated as constants).
inline std::vector<double> post_sampling_weights(const Objective& obj, const NegativeScores& sc) {
  if (obj.post_score == PostScore::Combined) return sampling::negative_weights(obj.sampler, sc.positive, sc.negatives);
  return sampling::negative_weights(obj.sampler, sc.positive_fg, sc.negatives_fg);
}

// L2 for one positive triple and fixed negatives / weights. Accumulates
// scale * gradients into `g`, routing the vertical part through `d_tprime`.
template <class T>
double loss_l2_weighted(const ParameterStore<T>& s, const Objective& obj, const vertical::VerticalForward* f,
                        const Triple& t, std::span<const EntityId> negatives, std::span<const double> weights,
                        double scale, GradientBuffer* g, std::span<double> d_tprime) {
  const auto q = f ? f->q : model::query_embed(s, t.head, t.relation);
  const auto sc = score_candidates(s, obj, q, f, t.tail, negatives);
  const double loss = negative_sampling_loss(sc.positive, sc.negatives, weights, obj.gamma);
  if (!g || scale == 0.0) return loss;

  std::vector<double> dq(q.size(), 0.0);
  std::vector<double> scratch;
  auto backprop = [&](EntityId e, double dscore) {
    if (dscore == 0.0) return;
    const auto te = model::as_double(s.entity(e), scratch);
    auto ge = g->entity_row(e);
    model::similarity_backward(obj.model, q, te, f ? obj.lambda * dscore : dscore, dq, ge);
    if (f) vertical::score_fc_backward(f->t_prime(), te, dscore, d_tprime, ge);
  };
  backprop(t.tail, -scale * sigmoid(-obj.gamma - sc.positive));
  for (std::size_t i = 0; i < negatives.size(); ++i)
    backprop(negatives[i], scale * weights[i] * sigmoid(sc.negatives[i] + obj.gamma));
  model::query_backward(s, t.head, t.relation, dq, *g);
  return loss;
}

struct TripleLoss {
  double l1 = 0.0;
  double l2 = 0.0;
  double total(double alpha) const { return l1 + alpha * l2; }
};

// L = L1 + alpha * L2 for one triple. With `weights` empty the post-sampling
// weights are computed from the current scores; gradients (scaled by
// `scale`) go to `g` when non-null.
template <class T>
TripleLoss triple_loss(const ParameterStore<T>& s, const Objective& obj, const vertical::ReferenceTable* refs,
                       const Triple& t, std::span<const EntityId> negatives, std::span<const double> weights,
                       double scale, GradientBuffer* g) {
  TripleLoss out;
  std::optional<vertical::VerticalForward> f;
  std::vector<double> d_tprime;
  if (obj.vertical) {
    if (!refs) throw Error("vertical objective needs a reference table");
    f = training_forward(s, *refs, obj, t);
    d_tprime.assign(f->out.t_prime.size(), 0.0);
    out.l1 = loss_l1(s, *f, t.tail, scale, g, d_tprime);
  }
  const vertical::VerticalForward* fp = f ? &*f : nullptr;
  std::vector<double> computed;
  if (weights.empty()) {
    const auto q = fp ? fp->q : model::query_embed(s, t.head, t.relation);
    computed = post_sampling_weights(obj, score_candidates(s, obj, q, fp, t.tail, negatives));
    weights = computed;
  }
  out.l2 = loss_l2_weighted(s, obj, fp, t, negatives, weights, scale * obj.alpha, g, d_tprime);
  if (g && f) vertical::backward_vertical(s, *f, d_tprime, *g);
  return out;
}

}  // namespace vlp::train
