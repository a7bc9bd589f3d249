#pragma once

#include <cstdlib>
#include <filesystem>
#include <ostream>

#include "vlp/binary_io.hpp"
#include "vlp/kg/distance.hpp"
#include "vlp/kg/graph.hpp"
#include "vlp/vertical/reference.hpp"

namespace vlp {

// Loaded dataset plus the preprocessing artifacts training and evaluation need.
struct Prepared {
  kg::KnowledgeGraph graph;  // reciprocal-augmented
  kg::DistanceIndex distances;
  vertical::ReferenceTable refs;
  std::uint64_t train_hash = 0;
  std::uint64_t dataset_hash = 0;
  bool distance_cache_hit = false;
  bool reference_cache_hit = false;
  std::filesystem::path distance_cache;
  std::filesystem::path reference_cache;
};

struct PrepareOptions {
  std::uint32_t cap = kg::kDefaultDistanceCap;
  std::uint32_t refs = 8;
  unsigned threads = 1;
  bool build = true;  // false: missing or stale caches are an error
};

// VLP_CACHE_DIR when set, otherwise <dataset>/cache.
inline std::filesystem::path cache_dir_for(const std::filesystem::path& dataset) {
  if (const char* env = std::getenv("VLP_CACHE_DIR"); env && *env) return env;
  return dataset / "cache";
}

// Hash of train.txt followed by valid.txt and test.txt. The reference table
// covers queries from every split, so its cache is keyed to all three.
inline std::uint64_t dataset_hash(const std::filesystem::path& dataset, std::uint64_t train_hash) {
  std::uint64_t h = train_hash;
  for (const char* name : {"valid.txt", "test.txt"}) {
    const auto part = io::hash_file(dataset / name);
    h = io::fnv1a(std::as_bytes(std::span(&part, 1)), h);
  }
  return h;
}

inline Prepared prepare(const std::filesystem::path& dataset, const PrepareOptions& opt, std::ostream* log = nullptr) {
  auto say = [&](const std::string& s) {
    if (log) *log << s << '\n';
  };
  Prepared p;
  p.graph = kg::load_dataset(dataset).augment_reciprocal();
  for (const auto& w : p.graph.warnings()) say("warning: " + w);
  p.train_hash = io::hash_file(dataset / "train.txt");
  p.dataset_hash = dataset_hash(dataset, p.train_hash);

  const auto dir = cache_dir_for(dataset);
  p.distance_cache = dir / "dist.vlpd";
  p.reference_cache = dir / "refs.vlpr";
  if (opt.build) std::filesystem::create_directories(dir);

  bool have_distances = false;
  if (std::filesystem::exists(p.distance_cache)) {
    try {
      auto c = kg::load_distance_cache(p.distance_cache);
      if (c.train_hash != p.train_hash) {
        say("distance cache stale (hash mismatch): " + p.distance_cache.string());
      } else if (c.index.cap() != opt.cap || c.index.num_entities() != p.graph.num_entities()) {
        say("distance cache built with different cap or entity count: " + p.distance_cache.string());
      } else {
        p.distances = std::move(c.index);
        have_distances = true;
      }
    } catch (const Error& e) {
      say(std::string("distance cache unreadable, regenerating: ") + e.what());
    }
  }
  if (have_distances) {
    p.distance_cache_hit = true;
    say("cache-hit " + p.distance_cache.string());
  } else {
    if (!opt.build) throw Error("distance cache missing or stale: " + p.distance_cache.string());
    p.distances = kg::compute_distances(p.graph, opt.cap, opt.threads);
    kg::save_distance_cache(p.distance_cache, p.distances, p.train_hash);
    say("cache-write " + p.distance_cache.string());
  }

  bool have_refs = false;
  if (std::filesystem::exists(p.reference_cache)) {
    try {
      auto c = vertical::load_reference_cache(p.reference_cache);
      if (c.train_hash != p.dataset_hash || c.distance_cap != opt.cap) {
        say("reference cache stale: " + p.reference_cache.string());
      } else if (c.table.count() < opt.refs) {
        say("reference cache holds N=" + std::to_string(c.table.count()) + ", need " + std::to_string(opt.refs));
      } else {
        p.refs = c.table.count() == opt.refs ? std::move(c.table) : c.table.truncated(opt.refs);
        have_refs = true;
      }
    } catch (const Error& e) {
      say(std::string("reference cache unreadable, regenerating: ") + e.what());
    }
  }
  if (have_refs) {
    p.reference_cache_hit = true;
    say("cache-hit " + p.reference_cache.string());
  } else {
    if (!opt.build) throw Error("reference cache missing or stale: " + p.reference_cache.string());
    p.refs = vertical::select_references(p.graph, p.distances, opt.refs, opt.threads);
    vertical::save_reference_cache(p.reference_cache, p.refs, p.dataset_hash, opt.cap);
    say("cache-write " + p.reference_cache.string());
  }
  return p;
}

}  // namespace vlp
