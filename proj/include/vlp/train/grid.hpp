#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vlp/train/config.hpp"

namespace vlp::train {

struct GridAxis {
  std::string key;
  std::vector<std::string> values;
};

using Grid = std::vector<GridAxis>;
using GridPoint = std::vector<std::pair<std::string, std::string>>;

// "N" is accepted as a synonym for "refs".
inline std::string canonical_key(std::string key) { return key == "N" ? "refs" : key; }

// Parses "key = v1,v2,...". Unknown keys and unparsable values fail here,
// before any run starts.
inline GridAxis parse_grid_axis(std::string_view spec) {
  const auto eq = spec.find('=');
  if (eq == std::string_view::npos) throw ConfigError("grid axis needs 'key=v1,v2': " + std::string(spec));
  GridAxis axis{canonical_key(std::string(detail::trim(spec.substr(0, eq)))), {}};
  if (!find_config_key(axis.key)) throw ConfigError("grid over unknown key '" + axis.key + "'");
  std::string_view rest = spec.substr(eq + 1);
  while (true) {
    const auto comma = rest.find(',');
    const auto v = detail::trim(rest.substr(0, comma));
    if (v.empty()) throw ConfigError("empty value in grid axis " + axis.key);
    TrainConfig probe;
    set_config_value(probe, axis.key, v);
    axis.values.emplace_back(v);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return axis;
}

// Search space used for tuning: batch, dimension, the three sampling
// temperatures, lambda and the margin.
inline Grid default_grid() {
  return {{"batch", {"256", "512", "1024"}},
          {"dim", {"500", "1000"}},
          {"alpha0", {"0.1", "0.5", "1.0", "1.5"}},
          {"alpha1", {"0.1", "0.5", "1.0", "1.5"}},
          {"alpha2", {"0.1", "0.5", "1.0", "1.5"}},
          {"lambda", {"0.1", "0.3", "0.5", "0.7", "0.9"}},
          {"gamma", {"4", "6", "8", "11", "15"}}};
}

// Cartesian product; the last axis varies fastest.
inline std::vector<GridPoint> expand_grid(const Grid& grid) {
  std::vector<GridPoint> points{{}};
  for (const auto& axis : grid) {
    std::vector<GridPoint> next;
    next.reserve(points.size() * axis.values.size());
    for (const auto& p : points)
      for (const auto& v : axis.values) {
        auto q = p;
        q.emplace_back(axis.key, v);
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }
  return points;
}

inline TrainConfig apply_point(TrainConfig cfg, const GridPoint& point) {
  for (const auto& [k, v] : point) set_config_value(cfg, k, v);
  return cfg;
}

}  // namespace vlp::train
