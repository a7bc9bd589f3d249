// Command-line entry point: preprocess, train, eval, report, sweep.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "vlp/vlp.hpp"

namespace fs = std::filesystem;
using namespace vlp;

namespace {

std::string hex(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Config-key flags shared by the commands that build a TrainConfig. Values are
// collected as strings and applied after the config file, so flags win.
struct ConfigFlags {
  std::optional<fs::path> config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> switches;
  bool no_auto = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "config file of 'key = value' lines");
    for (const auto& key : train::config_keys()) {
      if (key.name == "auto") continue;
      if (key.name == "no-pre" || key.name == "no-post") {
        app->add_flag("--" + key.name, switches[key.name], key.help);
        continue;
      }
      // Repeated flags: the last one wins.
      app->add_option("--" + key.name, values[key.name], key.help)
          ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }
    app->add_option("--auto", values["auto"], "build caches automatically when missing (true/false)");
    app->add_flag("--no-auto", no_auto, "fail instead of building missing caches");
  }

  // `base` holds defaults or values recovered from a previous run.
  train::TrainConfig resolve(CLI::App* app, train::TrainConfig base = {}, std::string_view skip = {}) const {
    if (config_file) train::apply_config_file(base, *config_file);
    for (const auto& [name, value] : values)
      if (name != skip && app->count("--" + name)) train::set_config_value(base, name, value);
    for (const auto& [name, on] : switches)
      if (app->count("--" + name)) train::set_config_value(base, name, on ? "true" : "false");
    if (no_auto) base.auto_preprocess = false;
    return base;
  }
};

void require_dataset(const train::TrainConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("no dataset given (--dataset DIR)");
}

void check_config(const train::TrainConfig& cfg) {
  if (const auto errors = train::validate(cfg); !errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
}

Prepared prepare_for(const train::TrainConfig& cfg, std::uint32_t refs, std::ostream& log) {
  require_dataset(cfg);
  return prepare(cfg.dataset, {cfg.cap, refs, cfg.threads, cfg.auto_preprocess}, &log);
}

// The block every run log starts with: resolved configuration plus hashes.
std::string header_block(const train::TrainConfig& cfg, const Prepared& p) {
  std::ostringstream os;
  os << train::to_text(cfg);
  os << "train-hash = " << hex(p.train_hash) << '\n';
  os << "dataset-hash = " << hex(p.dataset_hash) << '\n';
  os << "vocab-hash = " << hex(p.graph.vocab().fingerprint()) << '\n';
  os << "distance-cache = " << p.distance_cache.string() << (p.distance_cache_hit ? " (hit)" : " (built)") << '\n';
  os << "reference-cache = " << p.reference_cache.string() << (p.reference_cache_hit ? " (hit)" : " (built)")
     << '\n';
  return os.str();
}

void echo_header(const std::string& header) {
  std::istringstream lines(header);
  for (std::string line; std::getline(lines, line);) std::cout << "# " << line << '\n';
}

int cmd_preprocess(const train::TrainConfig& cfg) {
  require_dataset(cfg);
  const auto p = prepare(cfg.dataset, {cfg.cap, cfg.refs, cfg.threads, true}, &std::cout);
  std::cout << "entities\t" << p.graph.num_entities() << '\n'
            << "relations\t" << p.graph.num_base_relations() << '\n'
            << "distance-rows\t" << p.distances.num_entities() << '\n'
            << "reference-queries\t" << p.refs.size() << '\n';
  return 0;
}

int cmd_train(const train::TrainConfig& cfg, const std::optional<fs::path>& resume) {
  check_config(cfg);
  const auto p = prepare_for(cfg, cfg.refs, std::cerr);
  const auto header = header_block(cfg, p);
  echo_header(header);
  std::optional<train::Checkpoint> start;
  if (resume) {
    start = train::load_checkpoint(*resume);
    if (start->vocab_fingerprint != p.graph.vocab().fingerprint())
      throw Error("vocabulary mismatch: checkpoint " + hex(start->vocab_fingerprint) + " vs dataset " +
                  hex(p.graph.vocab().fingerprint()));
  }
  std::cout << "# step\tL1\tL2\tL\tvalid-MRR\tseconds\n";
  const auto result = train::train(cfg, p.graph, p.distances, p.refs,
                                   {.log = &std::cout, .persist = true, .resume = start ? &*start : nullptr,
                                    .header = header});
  std::cout << "final valid MRR " << full(result.final_valid_mrr) << '\n'
            << "best valid MRR " << full(result.best_valid_mrr) << " at step " << result.best_step << '\n'
            << "checkpoint " << result.final_path.string() << '\n'
            << "best " << result.best_path.string() << '\n';
  return 0;
}

struct EvalFlags {
  fs::path checkpoint;
  std::string score_mode;
  std::string split = "overall";
  std::string eval_split = "test";
  bool dump_ranks = false;
  std::optional<fs::path> report_dir;
};

void print_sections(const std::vector<eval::ReportRow>& rows, const std::string& split) {
  if (split == "all") {
    std::cout << eval::format_report(rows);
  } else if (split == "rmp") {
    std::cout << eval::format_report(rows, "rmp-head") << eval::format_report(rows, "rmp-tail");
  } else {
    std::cout << eval::format_report(rows, split);
  }
}

int cmd_eval(CLI::App* app, const ConfigFlags& flags, const EvalFlags& ef) {
  // Settings of the run that produced the checkpoint are the starting point.
  train::TrainConfig base;
  const auto run_config = ef.checkpoint.parent_path() / "config.txt";
  if (fs::exists(run_config)) train::apply_config_file(base, run_config);
  // --mode here may select the score (combined, fg-only, fc-only) instead of
  // the paradigm.
  std::optional<std::string> mode_override;
  if (app->count("--mode")) {
    const auto& m = flags.values.at("mode");
    if (m != "hlp" && m != "vlp") mode_override = m;
  }
  auto cfg = flags.resolve(app, base, mode_override ? "mode" : "");
  const auto ckpt = train::load_checkpoint(ef.checkpoint);
  if (app->count("--model") && ckpt.store.kind != cfg.model)
    throw Error("checkpoint holds a " + std::string(model::to_string(ckpt.store.kind)) + " model, flags ask for " +
                std::string(model::to_string(cfg.model)));
  cfg.model = ckpt.store.kind;
  cfg.dim = ckpt.store.space.dim;
  check_config(cfg);
  const auto p = prepare_for(cfg, cfg.refs, std::cerr);
  if (ckpt.vocab_fingerprint != p.graph.vocab().fingerprint())
    throw Error("vocabulary mismatch: checkpoint " + hex(ckpt.vocab_fingerprint) + " vs dataset " +
                hex(p.graph.vocab().fingerprint()));

  const auto score_mode = mode_override ? eval::parse_score_mode(*mode_override)
                          : !ef.score_mode.empty() ? eval::parse_score_mode(ef.score_mode)
                          : cfg.vertical() ? eval::ScoreMode::Combined
                                           : eval::ScoreMode::FgOnly;
  const auto header = header_block(cfg, p);
  echo_header(header);
  std::cout << "# checkpoint = " << ef.checkpoint.string() << " (step " << ckpt.step << ")\n"
            << "# score = " << eval::to_string(score_mode) << "\n# split = " << ef.eval_split << '\n';

  std::vector<Triple> triples;
  if (ef.eval_split == "test") triples = p.graph.test();
  else if (ef.eval_split == "valid") triples = train::strided_subset(p.graph.valid(), cfg.valid_limit);
  else throw ConfigError("--eval-split must be test or valid");

  const kg::FilterIndex filter(p.graph);
  eval::EvalContext ctx{&p.graph, &filter, &p.distances, kg::rmp_classify(p.graph)};
  const eval::Scorer<float> scorer{&ckpt.store, cfg.gsf(), &p.refs, cfg.refs, cfg.lambda, score_mode};
  const auto report = eval::evaluate(scorer, triples, ctx, cfg.threads);
  const auto rows = report.rows();

  const fs::path dir = ef.report_dir.value_or(ef.checkpoint.parent_path());
  fs::create_directories(dir.empty() ? fs::path(".") : dir);
  {
    std::ofstream os(dir / "report.tsv");
    eval::write_report_tsv(os, rows);
    if (!os) throw Error("cannot write " + (dir / "report.tsv").string());
  }
  if (ef.dump_ranks) {
    std::ofstream os(dir / "ranks.tsv");
    eval::write_ranks_tsv(os, p.graph, report);
    if (!os) throw Error("cannot write " + (dir / "ranks.tsv").string());
  }
  print_sections(rows, ef.split);
  std::cout << "MRR " << full(report.mrr()) << '\n';
  return 0;
}

int cmd_report(const fs::path& path, const std::string& split) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  print_sections(eval::read_report_tsv(in), split);
  return 0;
}

int cmd_sweep(const train::TrainConfig& base, const std::vector<std::string>& axes, bool default_grid, bool dry_run) {
  train::Grid grid;
  if (default_grid) grid = train::default_grid();
  for (const auto& a : axes) grid.push_back(train::parse_grid_axis(a));
  const auto points = train::expand_grid(grid);
  for (const auto& point : points) check_config(train::apply_point(base, point));

  std::cout << "# " << points.size() << " runs\n";
  std::string head;
  for (const auto& axis : grid) head += axis.key + '\t';
  if (dry_run) {
    std::cout << head << '\n';
    for (const auto& point : points) {
      std::string row;
      for (const auto& [k, v] : point) row += v + '\t';
      std::cout << row << '\n';
    }
    return 0;
  }

  std::uint32_t max_refs = base.refs;
  for (const auto& point : points) max_refs = std::max(max_refs, train::apply_point(base, point).refs);
  const auto p = prepare_for(base, max_refs, std::cerr);
  echo_header(header_block(base, p));

  fs::create_directories(base.out);
  std::ofstream summary(base.out / "sweep.tsv");
  summary << head << "valid-MRR\ttest-MRR\n";
  std::cout << head << "valid-MRR\ttest-MRR\n";
  const kg::FilterIndex filter(p.graph);
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto cfg = train::apply_point(base, points[i]);
    cfg.out = base.out / ("run" + std::to_string(i));
    const auto table = p.refs.truncated(cfg.refs);
    const auto result = train::train(cfg, p.graph, p.distances, table, {.header = header_block(cfg, p)});
    const eval::Scorer<float> scorer{&result.final_checkpoint.store, cfg.gsf(), &table, cfg.refs, cfg.lambda,
                                     cfg.vertical() ? eval::ScoreMode::Combined : eval::ScoreMode::FgOnly};
    eval::EvalContext ctx{&p.graph, &filter, nullptr, {}};
    const double test_mrr = eval::evaluate(scorer, p.graph.test(), ctx, cfg.threads).mrr();
    std::string row;
    for (const auto& [k, v] : points[i]) row += v + '\t';
    row += full(result.final_valid_mrr) + '\t' + full(test_mrr);
    summary << row << '\n' << std::flush;
    std::cout << row << '\n' << std::flush;
  }
  if (!summary) throw Error("cannot write " + (base.out / "sweep.tsv").string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vertical learning paradigm for knowledge graph completion"};
  app.require_subcommand(1);

  ConfigFlags pre_flags, train_flags, eval_flags, sweep_flags;
  auto* pre = app.add_subcommand("preprocess", "build the distance and reference caches");
  pre_flags.attach(pre);

  auto* tr = app.add_subcommand("train", "train a model");
  train_flags.attach(tr);
  std::optional<fs::path> resume;
  tr->add_option("--resume", resume, "continue from a checkpoint");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_flags.attach(ev);
  EvalFlags ef;
  ev->add_option("--checkpoint", ef.checkpoint, "checkpoint file")->required();
  ev->add_option("--score", ef.score_mode, "combined | fg-only | fc-only");
  ev->add_option("--split", ef.split, "overall | distance | relation | rmp | all")
      ->check(CLI::IsMember({"overall", "distance", "relation", "rmp", "all"}));
  ev->add_option("--eval-split", ef.eval_split, "test | valid")->check(CLI::IsMember({"test", "valid"}));
  ev->add_flag("--dump-ranks", ef.dump_ranks, "also write ranks.tsv");
  ev->add_option("--report-dir", ef.report_dir, "where report.tsv goes (default: checkpoint directory)");

  auto* rep = app.add_subcommand("report", "print a report.tsv as a table");
  fs::path report_path;
  std::string report_split = "all";
  rep->add_option("report", report_path, "report.tsv")->required();
  rep->add_option("--split", report_split, "overall | distance | relation | rmp | all")
      ->check(CLI::IsMember({"overall", "distance", "relation", "rmp", "all"}));

  auto* sw = app.add_subcommand("sweep", "grid search over config keys");
  sweep_flags.attach(sw);
  std::vector<std::string> axes;
  bool default_grid = false, dry_run = false;
  sw->add_option("--grid", axes, "axis 'key=v1,v2,...' (repeatable)");
  sw->add_flag("--default-grid", default_grid, "include the standard hyperparameter search space");
  sw->add_flag("--dry-run", dry_run, "list the combinations without training");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pre->parsed()) return cmd_preprocess(pre_flags.resolve(pre));
    if (tr->parsed()) return cmd_train(train_flags.resolve(tr), resume);
    if (ev->parsed()) return cmd_eval(ev, eval_flags, ef);
    if (rep->parsed()) return cmd_report(report_path, report_split);
    if (sw->parsed()) {
      if (axes.empty() && !default_grid) throw ConfigError("sweep needs --grid or --default-grid");
      return cmd_sweep(sweep_flags.resolve(sw), axes, default_grid, dry_run);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
