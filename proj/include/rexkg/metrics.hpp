#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rexkg/config.hpp"
#include "rexkg/embed.hpp"
#include "rexkg/graph.hpp"
#include "rexkg/parallel.hpp"

namespace rexkg {

// Best predicted counterpart of one ground-truth node. The same match table
// feeds all three metrics.
struct NodeMatch {
  int gt_node = 0;
  std::optional<int> pred_node;
  double score = 0.0;  // similarity s_i in [0,1]

  friend bool operator==(const NodeMatch&, const NodeMatch&) = default;
};

// For every GT node, the most similar Pred node by canonical-surface
// similarity. Empty Pred yields score-0 matches with no counterpart.
inline std::vector<NodeMatch> match_nodes(const KnowledgeGraph& gt, const KnowledgeGraph& pred,
                                          const EmbeddingStore& store, int jobs = 1) {
  std::vector<NodeMatch> matches(gt.nodes.size());
  if (pred.nodes.empty()) {
    for (std::size_t i = 0; i < gt.nodes.size(); ++i) {
      matches[i] = {static_cast<int>(i), std::nullopt, 0.0};
    }
    return matches;
  }
  std::vector<std::string> candidates;
  candidates.reserve(pred.nodes.size());
  std::unordered_map<std::string, int> candidate_ids;
  for (const Node& node : pred.nodes) {
    candidates.push_back(node.canonical_surface);
    candidate_ids[node.canonical_surface] = node.node_id;
  }
  parallel_chunks(gt.nodes.size(), jobs, [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t i = begin; i < end; ++i) {
      auto [surface, score] = best_match(gt.nodes[i].canonical_surface, candidates, store);
      matches[i] = {static_cast<int>(i), candidate_ids.at(surface), score};
    }
  });
  return matches;
}

// Mean similarity score over the given matches.
inline double kg_nsc(std::span<const NodeMatch> matches) {
  if (matches.empty()) fail(ErrorCode::EmptySelection, "kg_nsc over no matches");
  double sum = 0.0;
  for (const NodeMatch& m : matches) sum += m.score;
  return sum / static_cast<double>(matches.size());
}

// Per-type variant: restricts to GT nodes of the given entity type.
inline double kg_nsc(std::span<const NodeMatch> matches, const KnowledgeGraph& gt,
                     EntityType type) {
  std::vector<NodeMatch> filtered;
  for (const NodeMatch& m : matches) {
    if (gt.nodes[static_cast<std::size_t>(m.gt_node)].entity_type == type) {
      filtered.push_back(m);
    }
  }
  return kg_nsc(filtered);
}

// Re-expresses Pred edges in GT coordinates through the inverse best-match:
// a Pred edge contributes its weight to every cell whose row selected its
// source and whose column selected its target. Pred nodes never selected by
// any GT node contribute nothing.
inline AdjacencyView project_pred_edges(const KnowledgeGraph& pred,
                                        std::span<const NodeMatch> matches) {
  AdjacencyView view(static_cast<int>(matches.size()));
  std::unordered_map<int, std::vector<int>> selectors;
  for (const NodeMatch& m : matches) {
    if (m.pred_node) selectors[*m.pred_node].push_back(m.gt_node);
  }
  for (const Edge& e : pred.edges) {
    auto src = selectors.find(e.src);
    auto dst = selectors.find(e.dst);
    if (src == selectors.end() || dst == selectors.end()) continue;
    for (int g : src->second) {
      for (int h : dst->second) view.add(g, h, e.weight);
    }
  }
  return view;
}

inline AdjacencyView project_pred_edges(const KnowledgeGraph& pred,
                                        std::span<const NodeMatch> matches,
                                        const KnowledgeGraph& gt) {
  AdjacencyView view = project_pred_edges(pred, matches);
  view.node_types.reserve(gt.nodes.size());
  for (const Node& node : gt.nodes) view.node_types.push_back(node.entity_type);
  return view;
}

// Pearson correlation with defined zero-variance limits: two equal constant
// vectors correlate perfectly, any other constant row scores zero.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(ErrorCode::LengthMismatch, "pearson over lengths " + std::to_string(a.size()) +
                                        " and " + std::to_string(b.size()));
  }
  if (a.size() < 2) fail(ErrorCode::LengthMismatch, "pearson needs length >= 2");
  double n = static_cast<double>(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double da = a[i] - mean_a;
    double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 && var_b == 0.0) {
    return std::equal(a.begin(), a.end(), b.begin()) ? 1.0 : 0.0;
  }
  if (var_a == 0.0 || var_b == 0.0) return 0.0;
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

namespace detail {

inline std::int64_t masked_cell(const AdjacencyView& view, int i, int j,
                                const std::optional<TypePair>& mask,
                                const std::vector<EntityType>& types) {
  if (mask) {
    if (types[static_cast<std::size_t>(i)] != mask->first ||
        types[static_cast<std::size_t>(j)] != mask->second) {
      return 0;
    }
  }
  return view.at(i, j);
}

inline std::vector<double> masked_row(const AdjacencyView& view, int i,
                                      const std::optional<TypePair>& mask,
                                      const std::vector<EntityType>& types) {
  if (!mask) return view.row(i);
  std::vector<double> out(static_cast<std::size_t>(view.size()), 0.0);
  if (types[static_cast<std::size_t>(i)] != mask->first) return out;
  for (int j = 0; j < view.size(); ++j) {
    if (types[static_cast<std::size_t>(j)] == mask->second) {
      out[static_cast<std::size_t>(j)] = static_cast<double>(view.at(i, j));
    }
  }
  return out;
}

}  // namespace detail

// Row-weighted mean of per-row Pearson correlations. Row weights come from
// the GT matrix; zero-weight rows are skipped. The masked variant zeroes
// cells whose endpoint types do not match in both matrices before anything
// else, using the GT node types (both matrices share GT coordinates).
inline double kg_ams(const AdjacencyView& a_gt, const AdjacencyView& a_pred,
                     std::optional<TypePair> mask = std::nullopt,
                     std::vector<double>* row_weights_out = nullptr) {
  if (a_gt.size() != a_pred.size()) {
    fail(ErrorCode::LengthMismatch, "adjacency views of sizes " + std::to_string(a_gt.size()) +
                                        " and " + std::to_string(a_pred.size()));
  }
  const std::vector<EntityType>& types = a_gt.node_types;
  if (mask && static_cast<int>(types.size()) != a_gt.size()) {
    fail(ErrorCode::LengthMismatch, "masked kg_ams needs node types on the GT view");
  }
  int n = a_gt.size();
  std::vector<double> row_sums(static_cast<std::size_t>(n), 0.0);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      sum += static_cast<double>(detail::masked_cell(a_gt, i, j, mask, types));
    }
    row_sums[static_cast<std::size_t>(i)] = sum;
    total += sum;
  }
  if (total == 0.0) {
    fail(ErrorCode::AllRowsEmpty, "GT adjacency has no weight under the requested mask");
  }
  if (row_weights_out != nullptr) {
    row_weights_out->assign(static_cast<std::size_t>(n), 0.0);
  }
  double numerator = 0.0, denominator = 0.0;
  for (int i = 0; i < n; ++i) {
    double w = row_sums[static_cast<std::size_t>(i)] / total;
    if (w == 0.0) continue;
    if (row_weights_out != nullptr) (*row_weights_out)[static_cast<std::size_t>(i)] = w;
    std::vector<double> gt_row = detail::masked_row(a_gt, i, mask, types);
    std::vector<double> pred_row = detail::masked_row(a_pred, i, mask, types);
    numerator += w * pearson(pred_row, gt_row);
    denominator += w;
  }
  return numerator / denominator;
}

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

// Hash view of the directed edge set for O(1) pair lookups; subgraph scoring
// touches only the O(k^2) pairs inside each node set.
struct EdgeIndex {
  struct Info {
    RelationType relation;
    std::int64_t weight;
  };
  std::unordered_map<std::uint64_t, Info> directed;

  explicit EdgeIndex(const KnowledgeGraph& g) {
    directed.reserve(g.edges.size() * 2);
    for (const Edge& e : g.edges) {
      directed.emplace(edge_key(e.src, e.dst), Info{e.relation, e.weight});
    }
  }

  const Info* find(int a, int b) const {
    auto it = directed.find(edge_key(a, b));
    return it == directed.end() ? nullptr : &it->second;
  }

  bool has(int a, int b) const { return directed.count(edge_key(a, b)) != 0; }

  bool has(int a, int b, RelationType rel) const {
    const Info* info = find(a, b);
    return info != nullptr && info->relation == rel;
  }
};

inline bool subgraph_connected(std::span<const int> node_ids,
                               const std::vector<std::vector<int>>& nbrs) {
  if (node_ids.empty()) return false;
  std::set<int> members(node_ids.begin(), node_ids.end());
  std::vector<int> stack = {node_ids[0]};
  std::set<int> seen = {node_ids[0]};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int u : nbrs[static_cast<std::size_t>(v)]) {
      if (members.count(u) != 0 && seen.insert(u).second) stack.push_back(u);
    }
  }
  return seen.size() == members.size();
}

// Importance without the connectivity re-check, for use on enumerated sets.
inline double importance_unchecked(std::span<const int> node_ids, const KnowledgeGraph& gt,
                                   const EdgeIndex& gt_index) {
  double node_weight = 0.0;
  for (int v : node_ids) {
    node_weight += static_cast<double>(gt.nodes[static_cast<std::size_t>(v)].weight);
  }
  double edge_weight = 0.0;
  for (std::size_t i = 0; i < node_ids.size(); ++i) {
    for (std::size_t j = 0; j < node_ids.size(); ++j) {
      if (i == j) continue;
      if (const EdgeIndex::Info* info = gt_index.find(node_ids[i], node_ids[j])) {
        edge_weight += static_cast<double>(info->weight);
      }
    }
  }
  return node_weight * edge_weight;
}

}  // namespace detail

// Importance of a connected GT subgraph: sum of node weights times sum of
// induced edge weights.
inline double subgraph_importance(std::span<const int> node_ids, const KnowledgeGraph& gt) {
  std::vector<std::vector<int>> nbrs = undirected_neighbors(gt);
  if (!detail::subgraph_connected(node_ids, nbrs)) {
    fail(ErrorCode::NotConnected, "subgraph is not connected in the GT graph");
  }
  return detail::importance_unchecked(node_ids, gt, detail::EdgeIndex(gt));
}

namespace detail {

// Presence: half induced-edge coverage, half mean node similarity. Edge
// matching ignores relation label and direction unless strict; the matched
// count is capped at the GT induced edge count.
inline double presence_with_index(std::span<const int> node_ids, const EdgeIndex& gt_index,
                                  const EdgeIndex& pred_index,
                                  std::span<const NodeMatch> matches, bool strict) {
  std::vector<Edge> gt_induced;
  for (std::size_t i = 0; i < node_ids.size(); ++i) {
    for (std::size_t j = 0; j < node_ids.size(); ++j) {
      if (i == j) continue;
      if (const EdgeIndex::Info* info = gt_index.find(node_ids[i], node_ids[j])) {
        gt_induced.push_back({node_ids[i], node_ids[j], info->relation, info->weight});
      }
    }
  }

  double node_term = 0.0;
  for (int v : node_ids) node_term += matches[static_cast<std::size_t>(v)].score;
  node_term /= static_cast<double>(node_ids.size());

  double edge_term = 0.0;
  if (!gt_induced.empty()) {
    std::int64_t found = 0;
    if (strict) {
      for (const Edge& e : gt_induced) {
        const auto& ms = matches[static_cast<std::size_t>(e.src)];
        const auto& md = matches[static_cast<std::size_t>(e.dst)];
        if (ms.pred_node && md.pred_node &&
            pred_index.has(*ms.pred_node, *md.pred_node, e.relation)) {
          ++found;
        }
      }
    } else {
      std::set<std::pair<int, int>> gt_pairs;
      for (const Edge& e : gt_induced) {
        gt_pairs.insert({std::min(e.src, e.dst), std::max(e.src, e.dst)});
      }
      for (const auto& [a, b] : gt_pairs) {
        const auto& ma = matches[static_cast<std::size_t>(a)];
        const auto& mb = matches[static_cast<std::size_t>(b)];
        if (!ma.pred_node || !mb.pred_node) continue;
        if (pred_index.has(*ma.pred_node, *mb.pred_node)) ++found;
        if (pred_index.has(*mb.pred_node, *ma.pred_node)) ++found;
      }
    }
    found = std::min<std::int64_t>(found, static_cast<std::int64_t>(gt_induced.size()));
    edge_term = static_cast<double>(found) / static_cast<double>(gt_induced.size());
  }
  return 0.5 * (edge_term + node_term);
}

}  // namespace detail

inline double subgraph_presence(std::span<const int> node_ids, const KnowledgeGraph& gt,
                                const KnowledgeGraph& pred, std::span<const NodeMatch> matches,
                                bool strict = false) {
  detail::EdgeIndex gt_index(gt);
  detail::EdgeIndex pred_index(pred);
  return detail::presence_with_index(node_ids, gt_index, pred_index, matches, strict);
}

struct SubgraphRecord {
  std::vector<int> node_ids;  // sorted
  double importance = 0.0;
  double presence = 0.0;

  friend bool operator==(const SubgraphRecord&, const SubgraphRecord&) = default;
};

// Number of top subgraphs for a fraction in (0,1]: mathematical ceil with a
// small slack so binary floating point cannot push an exact product up.
inline std::size_t top_k_count(double top_fraction, std::size_t total) {
  double raw = top_fraction * static_cast<double>(total);
  auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  if (k < 1) k = 1;
  if (k > total) k = total;
  return k;
}

// Importance-weighted presence of the top-K connected k-subgraphs of GT.
inline double kg_scs(const KnowledgeGraph& gt, const KnowledgeGraph& pred,
                     std::span<const NodeMatch> matches, const CompareConfig& cfg = {},
                     std::vector<SubgraphRecord>* top_out = nullptr,
                     std::uint64_t cap = kDefaultSubgraphCap) {
  std::vector<std::vector<int>> subgraphs = connected_subgraphs(gt, cfg.k, cap);
  if (subgraphs.empty()) {
    fail(ErrorCode::NoSubgraphs, "GT graph has no connected subgraph of size " +
                                     std::to_string(cfg.k));
  }
  detail::EdgeIndex gt_index(gt);
  std::vector<SubgraphRecord> records;
  records.reserve(subgraphs.size());
  for (std::vector<int>& s : subgraphs) {
    SubgraphRecord record;
    record.importance = detail::importance_unchecked(s, gt, gt_index);
    record.node_ids = std::move(s);
    records.push_back(std::move(record));
  }
  std::sort(records.begin(), records.end(), [](const SubgraphRecord& a, const SubgraphRecord& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    return a.node_ids < b.node_ids;
  });
  std::size_t top_k = top_k_count(cfg.top_fraction, records.size());
  records.resize(top_k);

  detail::EdgeIndex pred_index(pred);
  double numerator = 0.0, denominator = 0.0;
  for (SubgraphRecord& record : records) {
    record.presence = detail::presence_with_index(record.node_ids, gt_index, pred_index, matches,
                                                  cfg.strict_presence_edges);
    numerator += record.importance * record.presence;
    denominator += record.importance;
  }
  if (top_out != nullptr) *top_out = std::move(records);
  return denominator == 0.0 ? 0.0 : numerator / denominator;
}

// ---------------------------------------------------------------------------
// Full comparison report

struct MetricsReport {
  double nsc_all = 0.0;
  std::map<EntityType, std::optional<double>> nsc_by_type;
  double ams_all = 0.0;
  std::vector<std::pair<TypePair, std::optional<double>>> ams_by_pair;
  double scs = 0.0;
  std::vector<double> row_weights;  // w_{r_i} of the unmasked AMS
  std::vector<NodeMatch> matches;
  std::vector<SubgraphRecord> top_subgraphs;
  CompareConfig config;
  std::string gt_label;
  std::string pred_label;
};

inline MetricsReport compare(const KnowledgeGraph& gt, const KnowledgeGraph& pred,
                             const EmbeddingStore& store, const CompareConfig& cfg = {},
                             int jobs = 1) {
  MetricsReport report;
  report.config = cfg;
  report.gt_label = gt.meta.source_label;
  report.pred_label = pred.meta.source_label;
  report.matches = match_nodes(gt, pred, store, jobs);

  report.nsc_all = kg_nsc(report.matches);
  for (EntityType type : kEntityTypes) {
    bool any = false;
    for (const Node& node : gt.nodes) {
      if (node.entity_type == type) {
        any = true;
        break;
      }
    }
    report.nsc_by_type[type] =
        any ? std::optional<double>(kg_nsc(report.matches, gt, type)) : std::nullopt;
  }

  AdjacencyView a_gt = adjacency(gt);
  AdjacencyView a_pred = project_pred_edges(pred, report.matches, gt);
  report.ams_all = kg_ams(a_gt, a_pred, std::nullopt, &report.row_weights);
  for (const TypePair& pair : cfg.ams_pairs) {
    std::optional<double> value;
    try {
      value = kg_ams(a_gt, a_pred, pair);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AllRowsEmpty) throw;
    }
    report.ams_by_pair.emplace_back(pair, value);
  }

  report.scs = kg_scs(gt, pred, report.matches, cfg, &report.top_subgraphs);
  return report;
}

namespace detail {

inline std::string type_abbrev(EntityType t) {
  switch (t) {
    case EntityType::Anatomy: return "ana";
    case EntityType::Disorder: return "dis";
    case EntityType::Concept: return "con";
    case EntityType::Device: return "dev";
    case EntityType::Procedure: return "pro";
    case EntityType::Size: return "siz";
  }
  return "?";
}

}  // namespace detail

inline std::string ams_pair_key(const TypePair& pair) {
  return detail::type_abbrev(pair.first) + "_" + detail::type_abbrev(pair.second);
}

inline njson metrics_report_to_json(const MetricsReport& report) {
  njson root;
  root["gt"] = report.gt_label;
  root["pred"] = report.pred_label;
  njson nsc;
  nsc["all"] = report.nsc_all;
  for (const auto& [type, value] : report.nsc_by_type) {
    if (value) {
      nsc[to_string(type)] = *value;
    } else {
      nsc[to_string(type)] = nullptr;
    }
  }
  root["nsc"] = std::move(nsc);
  njson ams;
  ams["all"] = report.ams_all;
  for (const auto& [pair, value] : report.ams_by_pair) {
    if (value) {
      ams[ams_pair_key(pair)] = *value;
    } else {
      ams[ams_pair_key(pair)] = nullptr;
    }
  }
  root["ams"] = std::move(ams);
  root["scs"] = report.scs;
  njson config;
  config["k"] = report.config.k;
  config["top_fraction"] = report.config.top_fraction;
  config["strict_presence_edges"] = report.config.strict_presence_edges;
  root["config"] = std::move(config);
  root["row_weights"] = report.row_weights;
  njson matches = njson::array();
  for (const NodeMatch& m : report.matches) {
    njson j;
    j["gt"] = m.gt_node;
    if (m.pred_node) {
      j["pred"] = *m.pred_node;
    } else {
      j["pred"] = nullptr;
    }
    j["score"] = m.score;
    matches.push_back(std::move(j));
  }
  root["matches"] = std::move(matches);
  njson subgraphs = njson::array();
  for (const SubgraphRecord& record : report.top_subgraphs) {
    njson j;
    j["nodes"] = record.node_ids;
    j["importance"] = record.importance;
    j["presence"] = record.presence;
    subgraphs.push_back(std::move(j));
  }
  root["top_subgraphs"] = std::move(subgraphs);
  return root;
}

inline std::string serialize_metrics_report(const MetricsReport& report) {
  return metrics_report_to_json(report).dump(2) + "\n";
}

// One-line CSV summary for batch runs.
inline std::string metrics_csv_header(const MetricsReport& report) {
  std::string out = "gt,pred,nsc_all";
  for (const auto& [type, value] : report.nsc_by_type) {
    out += ",nsc_";
    out += to_string(type);
  }
  out += ",ams_all";
  for (const auto& [pair, value] : report.ams_by_pair) out += ",ams_" + ams_pair_key(pair);
  out += ",scs\n";
  return out;
}

inline std::string metrics_csv_row(const MetricsReport& report) {
  char buf[32];
  auto fmt = [&buf](std::optional<double> v) -> std::string {
    if (!v) return "";
    std::snprintf(buf, sizeof(buf), "%.10g", *v);
    return buf;
  };
  std::string out = csv_escape(report.gt_label) + "," + csv_escape(report.pred_label) + "," +
                    fmt(report.nsc_all);
  for (const auto& [type, value] : report.nsc_by_type) out += "," + fmt(value);
  out += "," + fmt(report.ams_all);
  for (const auto& [pair, value] : report.ams_by_pair) out += "," + fmt(value);
  out += "," + fmt(report.scs) + "\n";
  return out;
}

}  // namespace rexkg
