#pragma once

#include <cstdint>
#include <filesystem>

#include "vlp/binary_io.hpp"
#include "vlp/model/embedding.hpp"
#include "vlp/train/adam.hpp"

namespace vlp::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  model::ParameterStore<float> store;
  AdamState<float> adam;
  std::uint64_t step = 0;
  std::uint64_t vocab_fingerprint = 0;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

// Layout: "VLPC", version u32, model u8, space u8, d_e u32, |E| u64, |R| u64,
// then f32 arrays (entities, relations, aggregator, Adam first/second moments
// for each of those in the same order), step u64, trailing vocabulary
// fingerprint u64. The aggregator hidden width equals the realified width.
inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  const auto& s = c.store;
  if (s.aggregator.hidden != s.entity_width()) throw Error("checkpoint requires aggregator width == entity width");
  io::write_atomically(path, [&](io::Writer& w) {
    w.magic("VLPC");
    w.put<std::uint32_t>(kCheckpointVersion);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(s.kind));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(s.space.kind));
    w.put<std::uint32_t>(s.space.dim);
    w.put<std::uint64_t>(s.num_entities);
    w.put<std::uint64_t>(s.num_relations);
    w.put_array<float>(s.entities);
    w.put_array<float>(s.relations);
    w.put_array<float>(s.aggregator.values);
    w.put_array<float>(c.adam.entity_m);
    w.put_array<float>(c.adam.entity_v);
    w.put_array<float>(c.adam.relation_m);
    w.put_array<float>(c.adam.relation_v);
    w.put_array<float>(c.adam.aggregator_m);
    w.put_array<float>(c.adam.aggregator_v);
    w.put<std::uint64_t>(c.step);
    w.put<std::uint64_t>(c.vocab_fingerprint);
  });
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  io::Reader r(path);
  r.expect_magic("VLPC");
  if (r.get<std::uint32_t>() != kCheckpointVersion) throw FormatError(path.string() + ": unsupported version");
  Checkpoint c;
  auto& s = c.store;
  const auto kind = r.get<std::uint8_t>();
  if (kind > 3) throw FormatError(path.string() + ": unknown model kind");
  s.kind = static_cast<model::ModelKind>(kind);
  const auto space = r.get<std::uint8_t>();
  if (space != static_cast<std::uint8_t>(model::space_of(s.kind)))
    throw FormatError(path.string() + ": space kind does not match model");
  s.space = {model::space_of(s.kind), r.get<std::uint32_t>()};
  s.num_entities = r.get<std::uint64_t>();
  s.num_relations = r.get<std::uint64_t>();
  if (s.space.dim == 0 || s.num_entities > (1ULL << 32) || s.num_relations > (1ULL << 32))
    throw FormatError(path.string() + ": invalid dimensions");
  const std::size_t width = s.entity_width();
  s.entities.resize(s.num_entities * width);
  s.relations.resize(s.num_relations * s.rel_width());
  s.aggregator = model::AggregatorParams<float>(width, width);
  r.get_array<float>(s.entities);
  r.get_array<float>(s.relations);
  r.get_array<float>(s.aggregator.values);
  c.adam = AdamState<float>(s);
  r.get_array<float>(c.adam.entity_m);
  r.get_array<float>(c.adam.entity_v);
  r.get_array<float>(c.adam.relation_m);
  r.get_array<float>(c.adam.relation_v);
  r.get_array<float>(c.adam.aggregator_m);
  r.get_array<float>(c.adam.aggregator_v);
  c.step = r.get<std::uint64_t>();
  c.adam.step = c.step;
  c.vocab_fingerprint = r.get<std::uint64_t>();
  if (!r.at_end()) throw FormatError(path.string() + ": trailing bytes");
  return c;
}

}  // namespace vlp::train
