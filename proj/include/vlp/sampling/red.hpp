#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vlp/kg/distance.hpp"
#include "vlp/rng.hpp"

namespace vlp::sampling {

enum class SamplerMode { ReD, SelfAdv, Uniform };
enum class PreWeighting { Uniform, Distance };
enum class PostWeighting { Uniform, SelfAdv, ReD };

inline std::string_view to_string(SamplerMode m) {
  switch (m) {
    case SamplerMode::ReD: return "red";
    case SamplerMode::SelfAdv: return "selfadv";
    case SamplerMode::Uniform: return "uniform";
  }
  return "?";
}

inline SamplerMode parse_sampler_mode(std::string_view s) {
  if (s == "red") return SamplerMode::ReD;
  if (s == "selfadv") return SamplerMode::SelfAdv;
  if (s == "uniform") return SamplerMode::Uniform;
  throw ConfigError("unknown sampler '" + std::string(s) + "'");
}

struct SamplerConfig {
  double alpha0 = 1.0;  // pre-sampling temperature
  double alpha1 = 1.0;  // post-sampling temperatures
  double alpha2 = 1.0;
  double tau = 1.0;     // post-sampling margin
  std::size_t negatives = 64;
  SamplerMode mode = SamplerMode::ReD;
  bool no_pre = false;   // ReD with uniform pre-sampling
  bool no_post = false;  // ReD with Self-Adv post-weights

  PreWeighting pre() const {
    return (mode == SamplerMode::ReD && !no_pre) ? PreWeighting::Distance : PreWeighting::Uniform;
  }
  PostWeighting post() const {
    switch (mode) {
      case SamplerMode::ReD: return no_post ? PostWeighting::SelfAdv : PostWeighting::ReD;
      case SamplerMode::SelfAdv: return PostWeighting::SelfAdv;
      case SamplerMode::Uniform: return PostWeighting::Uniform;
    }
    return PostWeighting::Uniform;
  }
};

// Draws t' with probability proportional to exp(-alpha0 * d(source, t')).
// Entities are grouped by distance: pick a bucket with probability
// |bucket| * exp(-alpha0 * d), then an entity uniformly inside it. Entities at
// the cap are never materialized; the k-th one is found by rank arithmetic on
// the sorted row.
class PreSampler {
 public:
  PreSampler() = default;

  static PreSampler uniform(std::size_t num_entities) {
    PreSampler p;
    p.num_entities_ = num_entities;
    return p;
  }

  PreSampler(const kg::DistanceIndex& index, double alpha0)
      : index_(&index), num_entities_(index.num_entities()), cap_(index.cap()), alpha0_(alpha0) {
    if (!(alpha0 > 0)) throw Error("pre-sampling temperature must be positive");
    const std::size_t nb = cap_ + 1;
    cumulative_.resize(num_entities_ * nb);
    bucket_offsets_.resize(num_entities_ * (nb + 1));
    grouped_.reserve(index.stored_pairs());
    std::vector<std::vector<EntityId>> buckets(nb);
    for (EntityId s = 0; s < num_entities_; ++s) {
      for (auto& b : buckets) b.clear();
      const auto ents = index.row_entities(s);
      const auto dist = index.row_distances(s);
      for (std::size_t i = 0; i < ents.size(); ++i) buckets[dist[i]].push_back(ents[i]);
      const std::size_t base = grouped_.size();
      auto* off = &bucket_offsets_[s * (nb + 1)];
      std::size_t pos = 0;
      for (std::size_t d = 0; d < cap_; ++d) {
        off[d] = static_cast<std::uint32_t>(pos);
        grouped_.insert(grouped_.end(), buckets[d].begin(), buckets[d].end());
        pos += buckets[d].size();
      }
      off[cap_] = static_cast<std::uint32_t>(pos);
      off[nb] = static_cast<std::uint32_t>(pos);
      row_begin_.push_back(base);

      double total = 0.0;
      auto* cum = &cumulative_[s * nb];
      for (std::size_t d = 0; d < nb; ++d) {
        total += static_cast<double>(bucket_size(s, d)) * std::exp(-alpha0_ * static_cast<double>(d));
        cum[d] = total;
      }
      std::size_t last = 0;
      for (std::size_t d = 0; d < nb; ++d) {
        cum[d] /= total;
        if (bucket_size(s, d) != 0) last = d;
      }
      for (std::size_t d = last; d < nb; ++d) cum[d] = 1.0;
    }
  }

  bool is_uniform() const noexcept { return index_ == nullptr; }
  std::size_t num_entities() const noexcept { return num_entities_; }

  std::size_t bucket_size(EntityId s, std::size_t d) const {
    if (d == cap_) return num_entities_ - index_->row_entities(s).size();
    const auto* off = &bucket_offsets_[s * (cap_ + 2)];
    return off[d + 1] - off[d];
  }

  // Normalized bucket weights for `source`, indexed by distance 0..cap.
  std::vector<double> bucket_weights(EntityId source) const {
    std::vector<double> w(cap_ + 1);
    const auto* cum = &cumulative_[source * (cap_ + 1)];
    for (std::size_t d = 0; d <= cap_; ++d) w[d] = cum[d] - (d ? cum[d - 1] : 0.0);
    return w;
  }

  // Exact p_0(source, e), computed independently of the bucket tables.
  double probability(EntityId source, EntityId e) const {
    if (is_uniform()) return 1.0 / static_cast<double>(num_entities_);
    double z = 0.0;
    for (std::size_t d = 0; d <= cap_; ++d)
      z += static_cast<double>(bucket_size(source, d)) * std::exp(-alpha0_ * static_cast<double>(d));
    return std::exp(-alpha0_ * static_cast<double>(index_->distance(source, e))) / z;
  }

  EntityId sample(EntityId source, Rng& rng) const {
    if (is_uniform()) return static_cast<EntityId>(rng.below(num_entities_));
    const std::size_t nb = cap_ + 1;
    const auto* cum = &cumulative_[source * nb];
    const double u = rng.uniform();
    std::size_t d = 0;
    while (d + 1 < nb && u >= cum[d]) ++d;
    if (d < cap_) {
      const auto* off = &bucket_offsets_[source * (nb + 1)];
      const std::size_t n = off[d + 1] - off[d];
      return grouped_[row_begin_[source] + off[d] + rng.below(n)];
    }
    // k-th entity (ascending id) not present in the sorted row.
    const auto row = index_->row_entities(source);
    const std::uint64_t k = rng.below(num_entities_ - row.size());
    std::size_t lo = 0, hi = row.size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (row[mid] - mid > k) hi = mid;
      else lo = mid + 1;
    }
    return static_cast<EntityId>(k + lo);
  }

  // l i.i.d. draws with replacement; the gold tail is not excluded.
  std::vector<EntityId> sample_negatives(EntityId source, std::size_t l, Rng& rng) const {
    std::vector<EntityId> out(l);
    for (auto& e : out) e = sample(source, rng);
    return out;
  }

 private:
  const kg::DistanceIndex* index_ = nullptr;
  std::size_t num_entities_ = 0;
  std::uint32_t cap_ = 0;
  double alpha0_ = 1.0;
  std::vector<double> cumulative_;            // num_entities x (cap+1)
  std::vector<std::uint32_t> bucket_offsets_;  // num_entities x (cap+2), relative to row_begin_
  std::vector<std::size_t> row_begin_;
  std::vector<EntityId> grouped_;              // rows re-ordered by (distance, id)
};

inline std::vector<double> softmax(std::span<const double> w) {
  std::vector<double> out(w.size());
  if (w.empty()) return out;
  const double mx = *std::max_element(w.begin(), w.end());
  double z = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) z += (out[i] = std::exp(w[i] - mx));
  for (auto& v : out) v /= z;
  return out;
}

// Unnormalized ReD weight: alpha1 * n below c + tau, alpha1 * c - alpha2 * (n - c - tau) above.
inline double red_logit(double c, double n, double alpha1, double alpha2, double tau) {
  if (n <= c + tau) return alpha1 * n;
  return alpha1 * c - alpha2 * (n - c - tau);
}

inline std::vector<double> post_weights(double c, std::span<const double> negatives, double alpha1, double alpha2,
                                        double tau) {
  std::vector<double> w(negatives.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = red_logit(c, negatives[i], alpha1, alpha2, tau);
  return softmax(w);
}

inline std::vector<double> selfadv_weights(std::span<const double> negatives, double alpha1) {
  std::vector<double> w(negatives.begin(), negatives.end());
  for (auto& v : w) v *= alpha1;
  return softmax(w);
}

inline std::vector<double> uniform_weights(std::size_t n) {
  return std::vector<double>(n, n ? 1.0 / static_cast<double>(n) : 0.0);
}

inline std::vector<double> negative_weights(const SamplerConfig& cfg, double positive,
                                            std::span<const double> negatives) {
  switch (cfg.post()) {
    case PostWeighting::ReD: return post_weights(positive, negatives, cfg.alpha1, cfg.alpha2, cfg.tau);
    case PostWeighting::SelfAdv: return selfadv_weights(negatives, cfg.alpha1);
    case PostWeighting::Uniform: return uniform_weights(negatives.size());
  }
  return {};
}

}  // namespace vlp::sampling
