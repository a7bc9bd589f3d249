#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vlp/kg/distance.hpp"
#include "vlp/model/embedding.hpp"
#include "vlp/sampling/red.hpp"

namespace vlp::train {

enum class Paradigm { Horizontal, Vertical };
enum class PostScore { Fg, Combined };

struct TrainConfig {
  std::filesystem::path dataset;
  std::filesystem::path out = "run";
  model::ModelKind model = model::ModelKind::RotatE;
  model::Norm norm = model::Norm::L2;
  Paradigm mode = Paradigm::Vertical;
  sampling::SamplerConfig sampler;
  PostScore postweight_score = PostScore::Fg;
  std::uint32_t dim = 100;
  std::size_t batch = 256;
  double lr = 1e-3;
  double lr_decay = 1.0;          // multiplicative step decay
  std::uint64_t lr_decay_every = 0;  // 0 disables decay
  std::uint64_t steps = 10000;
  double gamma = model::kDefaultGamma;
  double lambda = 0.5;
  double alpha = 0.5;  // weight of the negative-sampling loss
  std::uint32_t refs = 8;
  std::uint32_t cap = kg::kDefaultDistanceCap;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::uint64_t eval_every = 1000;
  std::size_t valid_limit = 0;  // 0 = whole validation split
  bool auto_preprocess = true;

  bool vertical() const noexcept { return mode == Paradigm::Vertical; }
  model::GsfModel gsf() const { return {model, norm}; }

  double learning_rate(std::uint64_t step) const {
    if (lr_decay_every == 0) return lr;
    return lr * std::pow(lr_decay, static_cast<double>(step / lr_decay_every));
  }
};

namespace detail {

template <class N>
N parse_number(std::string_view key, std::string_view text) {
  N value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("invalid value '" + std::string(text) + "' for " + std::string(key));
  return value;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("invalid boolean '" + std::string(text) + "' for " + std::string(key));
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace detail

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(TrainConfig&, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
  bool is_flag = false;  // boolean switch on the command line
};

// Every configuration key; the same names serve as config-file keys and CLI flags.
inline const std::vector<ConfigKey>& config_keys() {
  using detail::fmt;
  using detail::parse_bool;
  using detail::parse_number;
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    auto num = [&](std::string name, std::string help, auto member) {
      using M = std::remove_reference_t<decltype(std::declval<TrainConfig&>().*member)>;
      k.push_back({name, help,
                   [member, name](TrainConfig& c, std::string_view v) { c.*member = parse_number<M>(name, v); },
                   [member](const TrainConfig& c) {
                     if constexpr (std::is_floating_point_v<M>) return fmt(c.*member);
                     else return std::to_string(c.*member);
                   }});
    };
    auto sampler_num = [&](std::string name, std::string help, auto member) {
      using M = std::remove_reference_t<decltype(std::declval<sampling::SamplerConfig&>().*member)>;
      k.push_back({name, help,
                   [member, name](TrainConfig& c, std::string_view v) {
                     c.sampler.*member = parse_number<M>(name, v);
                   },
                   [member](const TrainConfig& c) {
                     if constexpr (std::is_floating_point_v<M>) return fmt(c.sampler.*member);
                     else return std::to_string(c.sampler.*member);
                   }});
    };
    k.push_back({"dataset", "dataset directory with train/valid/test.txt",
                 [](TrainConfig& c, std::string_view v) { c.dataset = std::string(v); },
                 [](const TrainConfig& c) { return c.dataset.string(); }});
    k.push_back({"out", "output directory",
                 [](TrainConfig& c, std::string_view v) { c.out = std::string(v); },
                 [](const TrainConfig& c) { return c.out.string(); }});
    k.push_back({"model", "transe|distmult|complex|rotate",
                 [](TrainConfig& c, std::string_view v) { c.model = model::parse_model_kind(v); },
                 [](const TrainConfig& c) { return std::string(model::to_string(c.model)); }});
    k.push_back({"norm", "l1|l2 (TransE)",
                 [](TrainConfig& c, std::string_view v) {
                   if (v == "l1") c.norm = model::Norm::L1;
                   else if (v == "l2") c.norm = model::Norm::L2;
                   else throw ConfigError("invalid norm '" + std::string(v) + "'");
                 },
                 [](const TrainConfig& c) { return std::string(c.norm == model::Norm::L1 ? "l1" : "l2"); }});
    k.push_back({"mode", "hlp|vlp",
                 [](TrainConfig& c, std::string_view v) {
                   if (v == "hlp") c.mode = Paradigm::Horizontal;
                   else if (v == "vlp") c.mode = Paradigm::Vertical;
                   else throw ConfigError("invalid mode '" + std::string(v) + "'");
                 },
                 [](const TrainConfig& c) { return std::string(c.vertical() ? "vlp" : "hlp"); }});
    k.push_back({"sampler", "uniform|selfadv|red",
                 [](TrainConfig& c, std::string_view v) { c.sampler.mode = sampling::parse_sampler_mode(v); },
                 [](const TrainConfig& c) { return std::string(sampling::to_string(c.sampler.mode)); }});
    k.push_back({"no-pre", "ReD ablation: uniform pre-sampling",
                 [](TrainConfig& c, std::string_view v) { c.sampler.no_pre = parse_bool("no-pre", v); },
                 [](const TrainConfig& c) { return std::string(c.sampler.no_pre ? "true" : "false"); }, true});
    k.push_back({"no-post", "ReD ablation: Self-Adv post-weights",
                 [](TrainConfig& c, std::string_view v) { c.sampler.no_post = parse_bool("no-post", v); },
                 [](const TrainConfig& c) { return std::string(c.sampler.no_post ? "true" : "false"); }, true});
    k.push_back({"postweight-score", "fg|f: score fed to the ReD post-weights",
                 [](TrainConfig& c, std::string_view v) {
                   if (v == "fg") c.postweight_score = PostScore::Fg;
                   else if (v == "f") c.postweight_score = PostScore::Combined;
                   else throw ConfigError("invalid postweight-score '" + std::string(v) + "'");
                 },
                 [](const TrainConfig& c) { return std::string(c.postweight_score == PostScore::Fg ? "fg" : "f"); }});
    num("dim", "embedding dimension", &TrainConfig::dim);
    num("batch", "batch size", &TrainConfig::batch);
    num("lr", "learning rate", &TrainConfig::lr);
    num("lr-decay", "learning-rate step decay factor", &TrainConfig::lr_decay);
    num("lr-decay-every", "steps between decays (0 = constant)", &TrainConfig::lr_decay_every);
    num("steps", "training steps", &TrainConfig::steps);
    num("gamma", "margin", &TrainConfig::gamma);
    num("lambda", "weight of f_g in the combined score", &TrainConfig::lambda);
    num("alpha", "weight of the negative-sampling loss", &TrainConfig::alpha);
    sampler_num("alpha0", "pre-sampling temperature", &sampling::SamplerConfig::alpha0);
    sampler_num("alpha1", "post-sampling temperature (rising side)", &sampling::SamplerConfig::alpha1);
    sampler_num("alpha2", "post-sampling temperature (falling side)", &sampling::SamplerConfig::alpha2);
    sampler_num("tau", "post-sampling margin", &sampling::SamplerConfig::tau);
    sampler_num("negs", "negatives per positive", &sampling::SamplerConfig::negatives);
    num("refs", "references per query", &TrainConfig::refs);
    num("cap", "graph distance cap (hops)", &TrainConfig::cap);
    num("seed", "random seed", &TrainConfig::seed);
    num("threads", "worker threads", &TrainConfig::threads);
    num("eval-every", "steps between validation runs (0 = only at the end)", &TrainConfig::eval_every);
    num("valid-limit", "validation triples per evaluation (0 = all)", &TrainConfig::valid_limit);
    k.push_back({"auto", "build caches automatically when missing",
                 [](TrainConfig& c, std::string_view v) { c.auto_preprocess = parse_bool("auto", v); },
                 [](const TrainConfig& c) { return std::string(c.auto_preprocess ? "true" : "false"); }});
    return k;
  }();
  return keys;
}

inline const ConfigKey* find_config_key(std::string_view name) {
  for (const auto& k : config_keys())
    if (k.name == name) return &k;
  return nullptr;
}

inline void set_config_value(TrainConfig& c, std::string_view key, std::string_view value) {
  const auto* k = find_config_key(key);
  if (!k) throw ConfigError("unknown config key '" + std::string(key) + "'");
  k->set(c, value);
}

inline std::string get_config_value(const TrainConfig& c, std::string_view key) {
  const auto* k = find_config_key(key);
  if (!k) throw ConfigError("unknown config key '" + std::string(key) + "'");
  return k->get(c);
}

namespace detail {
inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}
}  // namespace detail

// `key = value` lines; `#` starts a comment; unknown keys are errors.
inline void apply_config_text(TrainConfig& c, std::string_view text, const std::string& origin = "config") {
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(origin, lineno, "expected 'key = value'");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    try {
      set_config_value(c, key, value);
    } catch (const ConfigError& e) {
      throw ParseError(origin, lineno, e.what());
    }
  }
}

inline void apply_config_file(TrainConfig& c, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(c, ss.str(), path.string());
}

inline std::string to_text(const TrainConfig& c) {
  std::string out;
  for (const auto& k : config_keys()) out += k.name + " = " + k.get(c) + "\n";
  return out;
}

// Every violated constraint, so callers can report them together.
inline std::vector<std::string> validate(const TrainConfig& c) {
  std::vector<std::string> v;
  if (c.dim == 0) v.push_back("dim must be positive");
  if (c.batch == 0) v.push_back("batch must be positive");
  if (!(c.lr >= 0)) v.push_back("lr must be >= 0");
  if (!(c.lr_decay > 0)) v.push_back("lr-decay must be > 0");
  if (!(c.gamma > 0)) v.push_back("gamma must be > 0");
  if (!(c.lambda >= 0)) v.push_back("lambda must be >= 0");
  if (!(c.alpha >= 0)) v.push_back("alpha must be >= 0");
  if (!(c.sampler.alpha0 > 0)) v.push_back("alpha0 must be > 0");
  if (!(c.sampler.alpha1 > 0)) v.push_back("alpha1 must be > 0");
  if (!(c.sampler.alpha2 > 0)) v.push_back("alpha2 must be > 0");
  if (!(c.sampler.tau >= 0)) v.push_back("tau must be >= 0");
  if (c.sampler.negatives == 0) v.push_back("negs must be >= 1");
  if (c.refs > 254) v.push_back("refs must be <= 254");
  if (c.cap < 1 || c.cap > 255) v.push_back("cap must be in [1, 255]");
  if (c.threads == 0) v.push_back("threads must be >= 1");
  if ((c.sampler.no_pre || c.sampler.no_post) && c.sampler.mode != sampling::SamplerMode::ReD)
    v.push_back("no-pre/no-post are ablations of the red sampler");
  return v;
}

}  // namespace vlp::train
