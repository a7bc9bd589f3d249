#pragma once

#include <array>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "vlp/kg/distance.hpp"
#include "vlp/kg/graph.hpp"
#include "vlp/model/gsf.hpp"
#include "vlp/vertical/aggregate.hpp"

namespace vlp::eval {

enum class ScoreMode { Combined, FgOnly, FcOnly };

inline std::string_view to_string(ScoreMode m) {
  switch (m) {
    case ScoreMode::Combined: return "combined";
    case ScoreMode::FgOnly: return "fg-only";
    case ScoreMode::FcOnly: return "fc-only";
  }
  return "?";
}

inline ScoreMode parse_score_mode(std::string_view s) {
  if (s == "combined" || s == "combined-f") return ScoreMode::Combined;
  if (s == "fg-only") return ScoreMode::FgOnly;
  if (s == "fc-only") return ScoreMode::FcOnly;
  throw ConfigError("unknown score mode '" + std::string(s) + "'");
}

// Scores every candidate tail for a query under one of the three modes.
template <class T>
struct Scorer {
  const model::ParameterStore<T>* store = nullptr;
  model::GsfModel model;
  const vertical::ReferenceTable* refs = nullptr;
  std::size_t ref_count = 0;
  double lambda = 0.5;
  ScoreMode mode = ScoreMode::Combined;

  std::vector<double> scores(EntityId h, RelationId r) const {
    if (mode == ScoreMode::FgOnly) return model::score_fg_all(*store, model, h, r);
    if (!refs) throw Error("vertical scoring needs a reference table");
    const auto f = vertical::forward_vertical(*store, h, r, refs->lookup(h, r, std::nullopt, ref_count));
    if (mode == ScoreMode::FcOnly) return vertical::score_fc_all(*store, f);
    std::vector<double> out(store->num_entities);
    for (EntityId e = 0; e < store->num_entities; ++e) out[e] = vertical::score_f(*store, model, f, e, lambda);
    return out;
  }
};

// 1 + #(kept candidates scoring higher) + #(kept candidates tied) / 2, where
// kept = every entity except the gold and the other known true tails.
inline double filtered_rank(std::span<const double> scores, EntityId gold, std::span<const EntityId> known) {
  const double g = scores[gold];
  std::size_t greater = 0, ties = 0;
  for (std::size_t e = 0; e < scores.size(); ++e) {
    if (e == gold) continue;
    greater += scores[e] > g;
    ties += scores[e] == g;
  }
  for (EntityId e : known) {
    if (e == gold) continue;
    greater -= scores[e] > g;
    ties -= scores[e] == g;
  }
  return 1.0 + static_cast<double>(greater) + static_cast<double>(ties) / 2.0;
}

struct RankResult {
  Triple triple;
  double rank = 1.0;
  int bucket = 0;
  RelationId base_relation = 0;
  bool head_prediction = false;
  kg::MappingProperty rmp = kg::MappingProperty::OneToOne;
};

template <class T>
RankResult rank_triple(const Scorer<T>& scorer, const Triple& t, const kg::FilterIndex& filter) {
  const auto scores = scorer.scores(t.head, t.relation);
  RankResult out;
  out.triple = t;
  out.rank = filtered_rank(scores, t.tail, filter.tails(t.head, t.relation));
  return out;
}

struct MetricCell {
  std::size_t count = 0;
  double reciprocal_sum = 0.0;
  std::size_t hits1 = 0, hits3 = 0, hits10 = 0;

  void add(double rank) {
    ++count;
    reciprocal_sum += 1.0 / rank;
    hits1 += rank <= 1.0;
    hits3 += rank <= 3.0;
    hits10 += rank <= 10.0;
  }
  double mrr() const { return count ? reciprocal_sum / static_cast<double>(count) : 0.0; }
  double hits(std::size_t n) const { return count ? static_cast<double>(n) / static_cast<double>(count) : 0.0; }
};

struct ReportRow {
  std::string section;
  std::string key;
  std::size_t count = 0;
  double value = 0.0;
};

struct EvalReport {
  MetricCell overall;
  std::array<MetricCell, kg::kNumDistanceBuckets> distance{};
  std::map<std::string, MetricCell> relation;
  std::array<MetricCell, 4> rmp_head{};
  std::array<MetricCell, 4> rmp_tail{};
  std::vector<RankResult> ranks;

  double mrr() const { return overall.mrr(); }

  std::vector<ReportRow> rows() const {
    std::vector<ReportRow> out;
    out.push_back({"overall", "MRR", overall.count, overall.mrr()});
    out.push_back({"overall", "H@1", overall.count, overall.hits(overall.hits1)});
    out.push_back({"overall", "H@3", overall.count, overall.hits(overall.hits3)});
    out.push_back({"overall", "H@10", overall.count, overall.hits(overall.hits10)});
    for (int b = 0; b < kg::kNumDistanceBuckets; ++b)
      out.push_back({"distance", b + 1 == kg::kNumDistanceBuckets ? std::to_string(b + 1) + "+" : std::to_string(b + 1),
                     distance[b].count, distance[b].mrr()});
    for (const auto& [name, cell] : relation) out.push_back({"relation", name, cell.count, cell.mrr()});
    for (int m = 0; m < 4; ++m)
      out.push_back({"rmp-head", kg::to_string(static_cast<kg::MappingProperty>(m)), rmp_head[m].count, rmp_head[m].mrr()});
    for (int m = 0; m < 4; ++m)
      out.push_back({"rmp-tail", kg::to_string(static_cast<kg::MappingProperty>(m)), rmp_tail[m].count, rmp_tail[m].mrr()});
    return out;
  }
};

inline void write_report_tsv(std::ostream& os, const std::vector<ReportRow>& rows) {
  os << std::setprecision(6) << std::fixed;
  for (const auto& r : rows) os << r.section << '\t' << r.key << '\t' << r.count << '\t' << r.value << '\n';
}

inline std::vector<ReportRow> read_report_tsv(std::istream& is) {
  std::vector<ReportRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) f.push_back(field);
    if (f.size() != 4) throw ParseError("report.tsv", lineno, "expected 4 fields");
    try {
      rows.push_back({f[0], f[1], std::stoull(f[2]), std::stod(f[3])});
    } catch (const std::exception&) {
      throw ParseError("report.tsv", lineno, "bad number");
    }
  }
  return rows;
}

// Aligned human-readable table; `section` empty prints every section.
inline std::string format_report(const std::vector<ReportRow>& rows, std::string_view section = {}) {
  std::ostringstream os;
  std::size_t width = 8;
  for (const auto& r : rows) width = std::max(width, r.key.size());
  std::string current;
  for (const auto& r : rows) {
    if (!section.empty() && r.section != section) continue;
    if (r.section != current) {
      current = r.section;
      os << "\n[" << current << "]\n"
         << std::left << std::setw(int(width) + 2) << "key" << std::right << std::setw(10) << "count"
         << std::setw(10) << "value" << '\n';
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", r.value);
    os << std::left << std::setw(int(width) + 2) << r.key << std::right << std::setw(10) << r.count << std::setw(10)
       << buf << '\n';
  }
  return os.str();
}

struct EvalContext {
  const kg::KnowledgeGraph* graph = nullptr;
  const kg::FilterIndex* filter = nullptr;
  const kg::DistanceIndex* distances = nullptr;  // optional: distance breakdown
  std::vector<kg::MappingProperty> rmp;          // optional: RMP breakdown
};

// Ranks every triple (parallel over triples) and reduces in input order.
template <class T>
EvalReport evaluate(const Scorer<T>& scorer, std::span<const Triple> triples, const EvalContext& ctx,
                    unsigned threads = 1) {
  std::vector<RankResult> results(triples.size());
  auto work = [&](std::size_t worker, std::size_t stride) {
    for (std::size_t i = worker; i < triples.size(); i += stride) results[i] = rank_triple(scorer, triples[i], *ctx.filter);
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w, threads);
  }

  EvalReport report;
  const auto& g = *ctx.graph;
  const std::size_t base = g.num_base_relations();
  for (auto& res : results) {
    const Triple& t = res.triple;
    res.head_prediction = t.relation >= base;
    res.base_relation = static_cast<RelationId>(t.relation % base);
    res.bucket = ctx.distances ? kg::distance_bucket(ctx.distances->distance(t.head, t.tail)) : 0;
    report.overall.add(res.rank);
    if (res.bucket) report.distance[res.bucket - 1].add(res.rank);
    report.relation[g.relation_label(res.base_relation)].add(res.rank);
    if (!ctx.rmp.empty()) {
      res.rmp = ctx.rmp[res.base_relation];
      (res.head_prediction ? report.rmp_head : report.rmp_tail)[static_cast<int>(res.rmp)].add(res.rank);
    }
  }
  report.ranks = std::move(results);
  return report;
}

inline void write_ranks_tsv(std::ostream& os, const kg::KnowledgeGraph& g, const EvalReport& report) {
  for (const auto& r : report.ranks)
    os << g.entity_label(r.triple.head) << '\t' << g.relation_label(r.triple.relation) << '\t'
       << g.entity_label(r.triple.tail) << '\t' << r.rank << '\t' << r.bucket << '\n';
}

}  // namespace vlp::eval
