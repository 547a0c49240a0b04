#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "rexkg/corpus.hpp"
#include "rexkg/errors.hpp"
#include "rexkg/graph.hpp"
#include "rexkg/text.hpp"

namespace rexkg {

enum class ConceptCategory { Severity, Location, Duration, Progression, Size, Number, Other };

inline constexpr std::array<ConceptCategory, 7> kConceptCategories = {
    ConceptCategory::Severity, ConceptCategory::Location,    ConceptCategory::Duration,
    ConceptCategory::Progression, ConceptCategory::Size,     ConceptCategory::Number,
    ConceptCategory::Other,
};

inline const char* to_string(ConceptCategory c) {
  switch (c) {
    case ConceptCategory::Severity: return "severity";
    case ConceptCategory::Location: return "location";
    case ConceptCategory::Duration: return "duration";
    case ConceptCategory::Progression: return "progression";
    case ConceptCategory::Size: return "size";
    case ConceptCategory::Number: return "number";
    case ConceptCategory::Other: return "other";
  }
  return "?";
}

inline std::optional<ConceptCategory> concept_category_from(std::string_view s) {
  for (ConceptCategory c : kConceptCategories) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

// Total over queried concepts: anything not listed falls into Other.
class ConceptCategoryMap {
 public:
  void set(std::string_view concept_surface, ConceptCategory category) {
    entries_[normalize_surface(concept_surface)] = category;
  }

  ConceptCategory category(std::string_view concept_surface) const {
    auto it = entries_.find(normalize_surface(concept_surface));
    return it == entries_.end() ? ConceptCategory::Other : it->second;
  }

  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, ConceptCategory>& entries() const { return entries_; }

 private:
  std::map<std::string, ConceptCategory> entries_;
};

// CSV `concept,category`; a leading "concept,category" header is tolerated.
inline ConceptCategoryMap parse_category_map_stream(std::istream& in) {
  ConceptCategoryMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line == "concept,category") continue;
    std::size_t comma = line.rfind(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 >= line.size()) {
      fail(ErrorCode::MalformedLine,
           "line " + std::to_string(line_no) + ": expected concept,category");
    }
    std::string concept_surface = line.substr(0, comma);
    std::string category_str = normalize_surface(line.substr(comma + 1));
    auto category = concept_category_from(category_str);
    if (!category) {
      fail(ErrorCode::UnknownCategory,
           "line " + std::to_string(line_no) + ": unknown category \"" + category_str + "\"");
    }
    map.set(concept_surface, *category);
  }
  return map;
}

inline ConceptCategoryMap load_category_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open category map " + path.string());
  return parse_category_map_stream(in);
}

// Per-category average count of Modify edges from Concept nodes into nodes of
// target_type. The divisor is the number of target nodes with at least one
// concept modifier; pass divide_by_all_targets to use every target node.
inline std::map<ConceptCategory, double> concept_usage(const KnowledgeGraph& graph,
                                                       const ConceptCategoryMap& map,
                                                       EntityType target_type,
                                                       bool divide_by_all_targets = false) {
  std::int64_t target_nodes = 0;
  for (const Node& node : graph.nodes) {
    if (node.entity_type == target_type) ++target_nodes;
  }
  if (target_nodes == 0) {
    fail(ErrorCode::NoTargetNodes,
         std::string("graph has no nodes of type ") + to_string(target_type));
  }

  std::map<ConceptCategory, std::int64_t> pair_counts;
  for (ConceptCategory c : kConceptCategories) pair_counts[c] = 0;
  std::set<int> modified_targets;
  for (const Edge& e : graph.edges) {
    if (e.relation != RelationType::Modify) continue;
    const Node& src = graph.nodes[static_cast<std::size_t>(e.src)];
    const Node& dst = graph.nodes[static_cast<std::size_t>(e.dst)];
    if (src.entity_type != EntityType::Concept || dst.entity_type != target_type) continue;
    ++pair_counts[map.category(src.canonical_surface)];
    modified_targets.insert(e.dst);
  }

  double divisor = divide_by_all_targets ? static_cast<double>(target_nodes)
                                         : static_cast<double>(modified_targets.size());
  std::map<ConceptCategory, double> averages;
  for (ConceptCategory c : kConceptCategories) {
    averages[c] = divisor == 0.0 ? 0.0 : static_cast<double>(pair_counts[c]) / divisor;
  }
  return averages;
}

// Boolean coverage table with the witnessing edge kept per true cell.
struct CoverageMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<bool>> cells;                       // [row][col]
  std::vector<std::vector<std::optional<Edge>>> witnesses;    // parallel to cells

  bool at(std::size_t row, std::size_t col) const { return cells[row][col]; }

  std::string to_csv() const {
    std::string out = "label";
    for (const std::string& c : col_labels) out += "," + csv_escape(c);
    out += "\n";
    for (std::size_t r = 0; r < row_labels.size(); ++r) {
      out += csv_escape(row_labels[r]);
      for (std::size_t c = 0; c < col_labels.size(); ++c) {
        out += cells[r][c] ? ",1" : ",0";
      }
      out += "\n";
    }
    return out;
  }
};

namespace detail {

// Alias-set lookup: merging may have absorbed the queried surface.
inline std::optional<int> node_by_alias(const KnowledgeGraph& graph, std::string_view surface) {
  std::string key = normalize_surface(surface);
  for (const Node& node : graph.nodes) {
    if (node.aliases.count(key) != 0) return node.node_id;
  }
  return std::nullopt;
}

}  // namespace detail

// Cell (c,d) is true iff the graph has a Modify edge from the node whose
// alias set contains c to the node whose alias set contains d.
inline CoverageMatrix concept_disorder_matrix(const KnowledgeGraph& graph,
                                              const std::vector<std::string>& concepts,
                                              const std::vector<std::string>& disorders,
                                              std::vector<std::string>* warnings = nullptr) {
  CoverageMatrix matrix;
  matrix.row_labels = concepts;
  matrix.col_labels = disorders;
  matrix.cells.assign(concepts.size(), std::vector<bool>(disorders.size(), false));
  matrix.witnesses.assign(concepts.size(),
                          std::vector<std::optional<Edge>>(disorders.size(), std::nullopt));

  std::vector<std::optional<int>> concept_nodes, disorder_nodes;
  for (const std::string& c : concepts) {
    concept_nodes.push_back(detail::node_by_alias(graph, c));
    if (!concept_nodes.back() && warnings != nullptr) {
      warnings->push_back("concept surface \"" + c + "\" not found in graph");
    }
  }
  for (const std::string& d : disorders) {
    disorder_nodes.push_back(detail::node_by_alias(graph, d));
    if (!disorder_nodes.back() && warnings != nullptr) {
      warnings->push_back("disorder surface \"" + d + "\" not found in graph");
    }
  }

  std::map<std::pair<int, int>, Edge> modify_edges;
  for (const Edge& e : graph.edges) {
    if (e.relation == RelationType::Modify) modify_edges.emplace(std::pair(e.src, e.dst), e);
  }
  for (std::size_t r = 0; r < concepts.size(); ++r) {
    if (!concept_nodes[r]) continue;
    for (std::size_t c = 0; c < disorders.size(); ++c) {
      if (!disorder_nodes[c]) continue;
      auto it = modify_edges.find({*concept_nodes[r], *disorder_nodes[c]});
      if (it != modify_edges.end()) {
        matrix.cells[r][c] = true;
        matrix.witnesses[r][c] = it->second;
      }
    }
  }
  return matrix;
}

// Single-row coverage: a disorder is covered when any Size node touches it
// with a Modify or LocatedAt edge, in either direction.
inline CoverageMatrix size_coverage(const KnowledgeGraph& graph,
                                    const std::vector<std::string>& disorders,
                                    std::vector<std::string>* warnings = nullptr) {
  CoverageMatrix matrix;
  matrix.row_labels = {"size"};
  matrix.col_labels = disorders;
  matrix.cells.assign(1, std::vector<bool>(disorders.size(), false));
  matrix.witnesses.assign(1, std::vector<std::optional<Edge>>(disorders.size(), std::nullopt));

  for (std::size_t c = 0; c < disorders.size(); ++c) {
    std::optional<int> disorder_node = detail::node_by_alias(graph, disorders[c]);
    if (!disorder_node) {
      if (warnings != nullptr) {
        warnings->push_back("disorder surface \"" + disorders[c] + "\" not found in graph");
      }
      continue;
    }
    for (const Edge& e : graph.edges) {
      if (e.relation != RelationType::Modify && e.relation != RelationType::LocatedAt) continue;
      const Node& src = graph.nodes[static_cast<std::size_t>(e.src)];
      const Node& dst = graph.nodes[static_cast<std::size_t>(e.dst)];
      bool size_to_disorder = src.entity_type == EntityType::Size && e.dst == *disorder_node;
      bool disorder_to_size = dst.entity_type == EntityType::Size && e.src == *disorder_node;
      if (size_to_disorder || disorder_to_size) {
        matrix.cells[0][c] = true;
        matrix.witnesses[0][c] = e;
        break;
      }
    }
  }
  return matrix;
}

struct FrequencyRow {
  std::string concept_surface;
  ConceptCategory category = ConceptCategory::Other;
  std::string disorder_surface;
  std::int64_t count = 0;

  friend bool operator==(const FrequencyRow&, const FrequencyRow&) = default;
};

namespace detail {

inline std::vector<FrequencyRow> sorted_frequency_rows(
    std::map<std::pair<std::string, std::string>, std::int64_t>& counts,
    const ConceptCategoryMap& map,
    const std::map<std::string, ConceptCategory>& fixed_categories) {
  std::vector<FrequencyRow> rows;
  rows.reserve(counts.size());
  for (const auto& [key, count] : counts) {
    FrequencyRow row;
    row.concept_surface = key.first;
    row.disorder_surface = key.second;
    auto fixed = fixed_categories.find(key.first);
    row.category = fixed != fixed_categories.end() ? fixed->second : map.category(key.first);
    row.count = count;
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const FrequencyRow& a, const FrequencyRow& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.concept_surface != b.concept_surface) return a.concept_surface < b.concept_surface;
    return a.disorder_surface < b.disorder_surface;
  });
  return rows;
}

}  // namespace detail

// Mention-level counts of Modify triplets from Concept or Size mentions into
// Disorder mentions; Size sources always report category "size".
inline std::vector<FrequencyRow> frequency_report(const AnnotatedCorpus& corpus,
                                                  const ConceptCategoryMap& map) {
  std::map<std::pair<std::string, std::string>, std::int64_t> counts;
  std::map<std::string, ConceptCategory> fixed;
  for (const AnnotatedReport& report : corpus.reports) {
    std::unordered_map<std::string, const EntityMention*> by_id;
    for (const EntityMention& m : report.entities) by_id[m.mention_id] = &m;
    for (const RelationMention& rel : report.relations) {
      if (rel.relation_type != RelationType::Modify) continue;
      auto src = by_id.find(rel.source_id);
      auto dst = by_id.find(rel.target_id);
      if (src == by_id.end() || dst == by_id.end()) continue;
      bool concept_src = src->second->entity_type == EntityType::Concept;
      bool size_src = src->second->entity_type == EntityType::Size;
      if ((!concept_src && !size_src) || dst->second->entity_type != EntityType::Disorder) {
        continue;
      }
      std::string concept_surface = normalize_surface(src->second->text);
      if (size_src) fixed[concept_surface] = ConceptCategory::Size;
      ++counts[{concept_surface, normalize_surface(dst->second->text)}];
    }
  }
  return detail::sorted_frequency_rows(counts, map, fixed);
}

// Graph-level variant: Modify edge weights from Concept or Size nodes into
// Disorder nodes.
inline std::vector<FrequencyRow> frequency_report(const KnowledgeGraph& graph,
                                                  const ConceptCategoryMap& map) {
  std::map<std::pair<std::string, std::string>, std::int64_t> counts;
  std::map<std::string, ConceptCategory> fixed;
  for (const Edge& e : graph.edges) {
    if (e.relation != RelationType::Modify) continue;
    const Node& src = graph.nodes[static_cast<std::size_t>(e.src)];
    const Node& dst = graph.nodes[static_cast<std::size_t>(e.dst)];
    bool concept_src = src.entity_type == EntityType::Concept;
    bool size_src = src.entity_type == EntityType::Size;
    if ((!concept_src && !size_src) || dst.entity_type != EntityType::Disorder) continue;
    if (size_src) fixed[src.canonical_surface] = ConceptCategory::Size;
    counts[{src.canonical_surface, dst.canonical_surface}] += e.weight;
  }
  return detail::sorted_frequency_rows(counts, map, fixed);
}

inline std::string frequency_csv(const std::vector<FrequencyRow>& rows) {
  std::string out = "concept,category,disorder,count\n";
  for (const FrequencyRow& row : rows) {
    out += csv_escape(row.concept_surface) + "," + to_string(row.category) + "," +
           csv_escape(row.disorder_surface) + "," + std::to_string(row.count) + "\n";
  }
  return out;
}

inline std::string concept_usage_csv(const std::map<ConceptCategory, double>& averages) {
  std::string out = "category,average\n";
  char buf[32];
  for (const auto& [category, value] : averages) {
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    out += std::string(to_string(category)) + "," + buf + "\n";
  }
  return out;
}

}  // namespace rexkg
