#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rexkg/types.hpp"

namespace rexkg {

// Knobs of the graph construction pipeline. edge_min_count is the count
// threshold C, applied both to entity grouping and to edges.
struct BuildConfig {
  int edge_min_count = 5;
  double merge_threshold = 0.95;
  int max_entity_words = 8;
  bool include_absent = false;
  std::uint64_t seed = 0;

  friend bool operator==(const BuildConfig&, const BuildConfig&) = default;
};

using TypePair = std::pair<EntityType, EntityType>;

// Knobs of graph-to-graph comparison. K for the subgraph coverage score is
// ceil(top_fraction * number of enumerated subgraphs).
struct CompareConfig {
  int k = 2;
  double top_fraction = 0.10;
  // When set, presence-score edge matching requires direction and relation
  // label to agree instead of the default unordered endpoint-pair match.
  bool strict_presence_edges = false;
  std::vector<TypePair> ams_pairs = {
      {EntityType::Disorder, EntityType::Anatomy},
      {EntityType::Device, EntityType::Anatomy},
      {EntityType::Disorder, EntityType::Disorder},
  };

  friend bool operator==(const CompareConfig&, const CompareConfig&) = default;
};

}  // namespace rexkg
