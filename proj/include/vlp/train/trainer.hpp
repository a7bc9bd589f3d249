#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

#include "vlp/eval/evaluator.hpp"
#include "vlp/kg/distance.hpp"
#include "vlp/kg/graph.hpp"
#include "vlp/rng.hpp"
#include "vlp/sampling/red.hpp"
#include "vlp/train/adam.hpp"
#include "vlp/train/checkpoint.hpp"
#include "vlp/train/config.hpp"
#include "vlp/train/loss.hpp"
#include "vlp/vertical/reference.hpp"

namespace vlp::train {

struct StepDiagnostics {
  double l1 = 0.0;
  double l2 = 0.0;
  double loss = 0.0;
};

inline std::string describe_batch(std::span<const Triple> batch) {
  std::ostringstream os;
  for (std::size_t i = 0; i < batch.size(); ++i)
    os << (i ? " " : "") << '(' << batch[i].head << ',' << batch[i].relation << ',' << batch[i].tail << ')';
  return os.str();
}

// One optimization step on `batch`: mean of L1 + alpha * L2 over the batch,
// then a lazy Adam update. Negatives are drawn from `presampler` with `rng`.
template <class T>
StepDiagnostics train_step(ParameterStore<T>& s, AdamState<T>& adam, const Objective& obj,
                           const vertical::ReferenceTable* refs, const sampling::PreSampler& presampler,
                           std::span<const Triple> batch, Rng& rng, double lr, GradientBuffer& g) {
  g.clear();
  StepDiagnostics d;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& t : batch) {
    const auto negatives = presampler.sample_negatives(t.head, obj.sampler.negatives, rng);
    const auto l = triple_loss(s, obj, refs, t, negatives, {}, scale, &g);
    d.l1 += l.l1 * scale;
    d.l2 += l.l2 * scale;
  }
  d.loss = d.l1 + obj.alpha * d.l2;
  if (!std::isfinite(d.loss))
    throw NumericError("non-finite loss (L1=" + std::to_string(d.l1) + ", L2=" + std::to_string(d.l2) +
                       ") on batch " + describe_batch(batch));
  adam_update(s, adam, g, lr, obj.vertical);
  return d;
}

// Stateful driver over an augmented graph: deterministic batch order, per-step
// random streams, resumable from a checkpoint.
class Trainer {
 public:
  Trainer(TrainConfig cfg, const kg::KnowledgeGraph& graph, const kg::DistanceIndex& distances,
          const vertical::ReferenceTable& refs)
      : cfg_(std::move(cfg)),
        graph_(&graph),
        refs_(&refs),
        objective_(Objective::from(cfg_)),
        presampler_(cfg_.sampler.pre() == sampling::PreWeighting::Distance
                        ? sampling::PreSampler(distances, cfg_.sampler.alpha0)
                        : sampling::PreSampler::uniform(graph.num_entities())),
        store_(model::init_parameters<float>(cfg_.model, cfg_.dim, graph.num_entities(), graph.num_relations(),
                                             cfg_.seed, cfg_.gamma)),
        adam_(store_),
        grads_(store_) {
    if (!graph.augmented()) throw Error("trainer expects a reciprocal-augmented graph");
    if (graph.train().empty()) throw Error("empty training split");
    if (cfg_.vertical() && refs.count() < cfg_.refs)
      throw Error("reference table holds " + std::to_string(refs.count()) + " references, need " +
                  std::to_string(cfg_.refs));
  }

  const TrainConfig& config() const noexcept { return cfg_; }
  const ParameterStore<float>& store() const noexcept { return store_; }
  std::uint64_t step_count() const noexcept { return adam_.step; }

  void resume(const Checkpoint& c) {
    if (c.store.kind != store_.kind || c.store.space != store_.space || c.store.num_entities != store_.num_entities ||
        c.store.num_relations != store_.num_relations)
      throw Error("checkpoint does not match the configured model");
    store_ = c.store;
    adam_ = c.adam;
    adam_.step = c.step;
  }

  Checkpoint checkpoint() const { return {store_, adam_, adam_.step, graph_->vocab().fingerprint()}; }

  // Batch for the given step: consecutive slices of per-epoch seeded shuffles.
  std::vector<Triple> batch_for(std::uint64_t step) {
    const auto& train = graph_->train();
    const std::uint64_t n = train.size();
    std::vector<Triple> batch;
    batch.reserve(cfg_.batch);
    for (std::uint64_t pos = step * cfg_.batch; pos < (step + 1) * cfg_.batch; ++pos) {
      const std::uint64_t epoch = pos / n;
      if (!epoch_order_ || epoch_ != epoch) {
        epoch_order_.emplace(n);
        std::iota(epoch_order_->begin(), epoch_order_->end(), std::size_t{0});
        Rng rng(mix_seed(cfg_.seed, 2 * epoch + 1));
        rng.shuffle(epoch_order_->begin(), epoch_order_->end());
        epoch_ = epoch;
      }
      batch.push_back(train[(*epoch_order_)[pos % n]]);
    }
    return batch;
  }

  StepDiagnostics step() {
    const std::uint64_t s = adam_.step;
    const auto batch = batch_for(s);
    Rng rng(mix_seed(cfg_.seed, 2 * s + 2));
    return train_step(store_, adam_, objective_, cfg_.vertical() ? refs_ : nullptr, presampler_, batch, rng,
                      cfg_.learning_rate(s), grads_);
  }

  eval::Scorer<float> scorer(std::optional<eval::ScoreMode> mode = std::nullopt) const {
    const auto m = mode.value_or(cfg_.vertical() ? eval::ScoreMode::Combined : eval::ScoreMode::FgOnly);
    return {&store_, cfg_.gsf(), refs_, cfg_.refs, cfg_.lambda, m};
  }

 private:
  TrainConfig cfg_;
  const kg::KnowledgeGraph* graph_;
  const vertical::ReferenceTable* refs_;
  Objective objective_;
  sampling::PreSampler presampler_;
  ParameterStore<float> store_;
  AdamState<float> adam_;
  GradientBuffer grads_;
  std::optional<std::vector<std::size_t>> epoch_order_;
  std::uint64_t epoch_ = 0;
};

// Evenly strided subset of at most `limit` triples (all when limit == 0).
inline std::vector<Triple> strided_subset(std::span<const Triple> triples, std::size_t limit) {
  if (limit == 0 || limit >= triples.size()) return {triples.begin(), triples.end()};
  std::vector<Triple> out;
  out.reserve(limit);
  for (std::size_t i = 0; i < limit; ++i) out.push_back(triples[i * triples.size() / limit]);
  return out;
}

// Filtered validation MRR of the trainer's current parameters.
inline eval::EvalReport validation_report(const Trainer& trainer, const kg::KnowledgeGraph& graph,
                                 const kg::FilterIndex& filter) {
  const auto subset = strided_subset(graph.valid(), trainer.config().valid_limit);
  eval::EvalContext ctx{&graph, &filter, nullptr, {}};
  return eval::evaluate(trainer.scorer(), subset, ctx, trainer.config().threads);
}

struct TrainResult {
  Checkpoint final_checkpoint;
  double final_valid_mrr = 0.0;
  double best_valid_mrr = -1.0;
  std::uint64_t best_step = 0;
  std::filesystem::path final_path;
  std::filesystem::path best_path;
};

// Full run: periodic validation, best-checkpoint retention, final checkpoint.
// Writes config.txt, train.log, best.vlpc and final.vlpc into cfg.out when
// `persist` is set. Log lines: step, L1, L2, L, valid MRR, wall seconds.
struct RunOptions {
  std::ostream* log = nullptr;            // echo of the training log
  bool persist = true;                    // write files into cfg.out
  const Checkpoint* resume = nullptr;     // continue from this state
  std::string header;                     // written as '#' lines before the log rows
};

inline TrainResult train(const TrainConfig& cfg, const kg::KnowledgeGraph& graph, const kg::DistanceIndex& distances,
                         const vertical::ReferenceTable& refs, const RunOptions& run = {}) {
  std::ostream* log = run.log;
  const bool persist = run.persist;
  const Checkpoint* resume_from = run.resume;
  if (const auto errors = validate(cfg); !errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  Trainer trainer(cfg, graph, distances, refs);
  if (resume_from) trainer.resume(*resume_from);
  const kg::FilterIndex filter(graph);
  TrainResult result;
  std::ofstream log_file;
  if (persist) {
    std::filesystem::create_directories(cfg.out);
    if (!(std::ofstream(cfg.out / "config.txt") << to_text(cfg))) throw Error("cannot write " + (cfg.out / "config.txt").string());
    log_file.open(cfg.out / "train.log", resume_from ? std::ios::app : std::ios::trunc);
    if (!log_file) throw Error("cannot write " + (cfg.out / "train.log").string());
    std::istringstream lines(run.header);
    for (std::string line; std::getline(lines, line);) log_file << "# " << line << '\n';
    result.final_path = cfg.out / "final.vlpc";
    result.best_path = cfg.out / "best.vlpc";
  }
  const auto start = std::chrono::steady_clock::now();
  double l1 = 0, l2 = 0, total = 0;
  std::size_t since = 0;

  auto checkpoint_eval = [&] {
    const double mrr = validation_report(trainer, graph, filter).mrr();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double k = since ? 1.0 / static_cast<double>(since) : 0.0;
    std::ostringstream line;
    line << trainer.step_count() << '\t' << l1 * k << '\t' << l2 * k << '\t' << total * k << '\t' << mrr << '\t'
         << secs << '\n';
    if (log) *log << line.str() << std::flush;
    if (log_file) log_file << line.str() << std::flush;
    l1 = l2 = total = 0;
    since = 0;
    if (mrr > result.best_valid_mrr) {
      result.best_valid_mrr = mrr;
      result.best_step = trainer.step_count();
      if (persist) save_checkpoint(result.best_path, trainer.checkpoint());
    }
    return mrr;
  };

  while (trainer.step_count() < cfg.steps) {
    const auto d = trainer.step();
    l1 += d.l1;
    l2 += d.l2;
    total += d.loss;
    ++since;
    if (cfg.eval_every && trainer.step_count() % cfg.eval_every == 0 && trainer.step_count() < cfg.steps)
      checkpoint_eval();
  }
  result.final_valid_mrr = checkpoint_eval();
  result.final_checkpoint = trainer.checkpoint();
  if (persist) save_checkpoint(result.final_path, result.final_checkpoint);
  return result;
}

struct SweepPoint {
  std::uint32_t refs = 0;
  double valid_mrr = 0.0;
  double test_mrr = 0.0;
};

// Trains and evaluates once per reference count with an otherwise identical
// configuration. `full` must hold at least max(ns) references per query.
inline std::vector<SweepPoint> reference_sweep(TrainConfig cfg, const kg::KnowledgeGraph& graph,
                                               const kg::DistanceIndex& distances,
                                               const vertical::ReferenceTable& full,
                                               std::span<const std::uint32_t> ns, std::ostream* log = nullptr) {
  if (ns.empty()) throw ConfigError("reference sweep needs at least one N");
  const kg::FilterIndex filter(graph);
  std::vector<SweepPoint> out;
  for (const auto n : ns) {
    if (n > full.count())
      throw Error("reference table holds N=" + std::to_string(full.count()) + ", sweep asks for " +
                  std::to_string(n));
    cfg.refs = n;
    const auto table = full.truncated(n);
    const auto result = train(cfg, graph, distances, table, {.log = log, .persist = false});
    const eval::Scorer<float> scorer{&result.final_checkpoint.store, cfg.gsf(), &table, n, cfg.lambda,
                                     cfg.vertical() ? eval::ScoreMode::Combined : eval::ScoreMode::FgOnly};
    eval::EvalContext ctx{&graph, &filter, nullptr, {}};
    const double test_mrr = eval::evaluate(scorer, graph.test(), ctx, cfg.threads).mrr();
    out.push_back({n, result.final_valid_mrr, test_mrr});
  }
  return out;
}

}  // namespace vlp::train
