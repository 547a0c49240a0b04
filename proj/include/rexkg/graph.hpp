#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "rexkg/config.hpp"
#include "rexkg/errors.hpp"
#include "rexkg/text.hpp"
#include "rexkg/types.hpp"

namespace rexkg {

using njson = nlohmann::ordered_json;

inline constexpr const char* kGraphFormatVersion = "1";

struct PresenceBreakdown {
  std::int64_t present = 0;
  std::int64_t absent = 0;

  friend bool operator==(const PresenceBreakdown&, const PresenceBreakdown&) = default;
};

struct Node {
  int node_id = 0;
  std::string canonical_surface;
  EntityType entity_type = EntityType::Anatomy;
  std::optional<std::string> cui;
  std::int64_t weight = 1;  // total mention count of all member surfaces
  std::set<std::string> aliases;
  std::optional<PresenceBreakdown> presence_breakdown;

  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  int src = 0;
  int dst = 0;
  RelationType relation = RelationType::Modify;
  std::int64_t weight = 1;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct GraphMeta {
  std::string source_label;
  std::int64_t report_count = 0;
  std::optional<BuildConfig> build_config;

  friend bool operator==(const GraphMeta&, const GraphMeta&) = default;
};

// Weighted typed directed graph with dense node ids 0..N-1 and at most one
// edge per ordered (src,dst) pair. Immutable once built or loaded.
struct KnowledgeGraph {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  GraphMeta meta;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t edge_count() const { return edges.size(); }

  friend bool operator==(const KnowledgeGraph&, const KnowledgeGraph&) = default;
};

// Checks the structural invariants; returns human-readable problems.
inline std::vector<std::string> check_graph(const KnowledgeGraph& g) {
  std::vector<std::string> problems;
  int n = static_cast<int>(g.nodes.size());
  for (int i = 0; i < n; ++i) {
    const Node& node = g.nodes[static_cast<std::size_t>(i)];
    if (node.node_id != i) problems.push_back("node ids not dense at index " + std::to_string(i));
    if (node.weight < 1) problems.push_back("node " + std::to_string(i) + " weight < 1");
    if (node.aliases.count(node.canonical_surface) == 0) {
      problems.push_back("node " + std::to_string(i) + " canonical surface not in aliases");
    }
  }
  std::set<std::pair<int, int>> seen;
  for (const Edge& e : g.edges) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) {
      problems.push_back("edge endpoint out of range");
      continue;
    }
    if (e.src == e.dst) problems.push_back("self-loop at node " + std::to_string(e.src));
    if (e.weight < 1) problems.push_back("edge weight < 1");
    if (!seen.insert({e.src, e.dst}).second) {
      problems.push_back("duplicate edge " + std::to_string(e.src) + "->" +
                         std::to_string(e.dst));
    }
  }
  return problems;
}

// N x N nonnegative weight matrix over node_id order, dense up to
// kDenseLimit nodes and hash-backed above it. An optional type-pair mask
// zeroes every cell whose endpoint types do not match.
class AdjacencyView {
 public:
  static constexpr int kDenseLimit = 5000;

  explicit AdjacencyView(int n) : n_(n), dense_(n <= kDenseLimit) {
    if (dense_) cells_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
  }

  int size() const { return n_; }

  void add(int i, int j, std::int64_t w) {
    if (w == 0) return;
    if (dense_) {
      cells_[index(i, j)] += w;
    } else {
      sparse_[key(i, j)] += w;
    }
  }

  std::int64_t at(int i, int j) const {
    if (dense_) return cells_[index(i, j)];
    auto it = sparse_.find(key(i, j));
    return it == sparse_.end() ? 0 : it->second;
  }

  std::int64_t total() const {
    std::int64_t sum = 0;
    if (dense_) {
      for (std::int64_t v : cells_) sum += v;
    } else {
      for (const auto& [k, v] : sparse_) sum += v;
    }
    return sum;
  }

  std::vector<double> row(int i) const {
    std::vector<double> out(static_cast<std::size_t>(n_), 0.0);
    if (dense_) {
      for (int j = 0; j < n_; ++j) out[static_cast<std::size_t>(j)] =
          static_cast<double>(cells_[index(i, j)]);
    } else {
      for (const auto& [k, v] : sparse_) {
        if (static_cast<int>(k >> 32) == i) {
          out[static_cast<std::size_t>(k & 0xFFFFFFFF)] = static_cast<double>(v);
        }
      }
    }
    return out;
  }

  // Node types in id order; required for masked metric variants on
  // projected matrices, filled by adjacency() automatically.
  std::vector<EntityType> node_types;

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
           static_cast<std::size_t>(j);
  }
  static std::uint64_t key(int i, int j) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
           static_cast<std::uint32_t>(j);
  }

  int n_;
  bool dense_;
  std::vector<std::int64_t> cells_;
  std::unordered_map<std::uint64_t, std::int64_t> sparse_;
};

inline AdjacencyView adjacency(const KnowledgeGraph& g,
                               std::optional<TypePair> mask = std::nullopt) {
  AdjacencyView view(static_cast<int>(g.nodes.size()));
  view.node_types.reserve(g.nodes.size());
  for (const Node& node : g.nodes) view.node_types.push_back(node.entity_type);
  for (const Edge& e : g.edges) {
    if (mask) {
      if (view.node_types[static_cast<std::size_t>(e.src)] != mask->first ||
          view.node_types[static_cast<std::size_t>(e.dst)] != mask->second) {
        continue;
      }
    }
    view.add(e.src, e.dst, e.weight);
  }
  return view;
}

// Undirected neighbor lists over the directed edge set.
inline std::vector<std::vector<int>> undirected_neighbors(const KnowledgeGraph& g) {
  std::vector<std::set<int>> sets(g.nodes.size());
  for (const Edge& e : g.edges) {
    sets[static_cast<std::size_t>(e.src)].insert(e.dst);
    sets[static_cast<std::size_t>(e.dst)].insert(e.src);
  }
  std::vector<std::vector<int>> out(g.nodes.size());
  for (std::size_t i = 0; i < sets.size(); ++i) out[i].assign(sets[i].begin(), sets[i].end());
  return out;
}

inline constexpr std::uint64_t kDefaultSubgraphCap = 10'000'000;

namespace detail {

inline void extend_subgraph(const std::vector<std::vector<int>>& nbrs, int root,
                            std::vector<int>& sub, std::vector<int>& ext,
                            std::unordered_set<int>& sub_or_nbr, std::size_t k,
                            std::uint64_t cap, std::uint64_t& emitted,
                            const std::function<void(const std::vector<int>&)>& emit) {
  if (sub.size() == k) {
    if (++emitted > cap) {
      fail(ErrorCode::SizeTooLarge,
           "connected-subgraph enumeration exceeded cap of " + std::to_string(cap));
    }
    std::vector<int> out = sub;
    std::sort(out.begin(), out.end());
    emit(out);
    return;
  }
  // Each candidate is consumed once; extensions only gain exclusive
  // neighbors with id > root, which makes every set appear exactly once.
  while (!ext.empty()) {
    int w = ext.back();
    ext.pop_back();
    std::vector<int> next_ext = ext;
    std::vector<int> added;
    for (int u : nbrs[static_cast<std::size_t>(w)]) {
      if (u > root && sub_or_nbr.find(u) == sub_or_nbr.end()) {
        next_ext.push_back(u);
        added.push_back(u);
      }
    }
    sub.push_back(w);
    for (int u : added) sub_or_nbr.insert(u);
    extend_subgraph(nbrs, root, sub, next_ext, sub_or_nbr, k, cap, emitted, emit);
    for (int u : added) sub_or_nbr.erase(u);
    sub.pop_back();
  }
}

}  // namespace detail

// Streams every connected induced node set of size exactly k (connectivity on
// the undirected skeleton), each exactly once as a sorted id tuple, in a
// deterministic order.
inline void enumerate_connected_subgraphs(
    const KnowledgeGraph& g, int k,
    const std::function<void(const std::vector<int>&)>& emit,
    std::uint64_t cap = kDefaultSubgraphCap) {
  if (k < 2) throw std::invalid_argument("subgraph size must be at least 2");
  std::vector<std::vector<int>> nbrs = undirected_neighbors(g);
  std::uint64_t emitted = 0;
  for (int v = 0; v < static_cast<int>(g.nodes.size()); ++v) {
    std::vector<int> sub = {v};
    std::vector<int> ext;
    std::unordered_set<int> sub_or_nbr = {v};
    for (int u : nbrs[static_cast<std::size_t>(v)]) {
      if (u > v) {
        ext.push_back(u);
        sub_or_nbr.insert(u);
      }
    }
    // Candidates are popped from the back; reversing makes root-level pairs
    // come out in ascending order.
    std::reverse(ext.begin(), ext.end());
    detail::extend_subgraph(nbrs, v, sub, ext, sub_or_nbr, static_cast<std::size_t>(k), cap,
                            emitted, emit);
  }
}

inline std::vector<std::vector<int>> connected_subgraphs(
    const KnowledgeGraph& g, int k, std::uint64_t cap = kDefaultSubgraphCap) {
  std::vector<std::vector<int>> out;
  enumerate_connected_subgraphs(g, k, [&out](const std::vector<int>& s) { out.push_back(s); },
                                cap);
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

inline njson graph_to_json(const KnowledgeGraph& g) {
  njson root;
  root["version"] = kGraphFormatVersion;
  njson meta;
  meta["source_label"] = g.meta.source_label;
  meta["report_count"] = g.meta.report_count;
  if (g.meta.build_config) {
    const BuildConfig& cfg = *g.meta.build_config;
    njson c;
    c["edge_min_count"] = cfg.edge_min_count;
    c["merge_threshold"] = cfg.merge_threshold;
    c["max_entity_words"] = cfg.max_entity_words;
    c["include_absent"] = cfg.include_absent;
    c["seed"] = cfg.seed;
    meta["build_config"] = std::move(c);
  }
  root["meta"] = std::move(meta);
  njson nodes = njson::array();
  for (const Node& node : g.nodes) {
    njson n;
    n["id"] = node.node_id;
    n["surface"] = node.canonical_surface;
    n["type"] = to_string(node.entity_type);
    if (node.cui) n["cui"] = *node.cui;
    n["weight"] = node.weight;
    n["aliases"] = node.aliases;  // std::set keeps them sorted
    if (node.presence_breakdown) {
      njson p;
      p["present"] = node.presence_breakdown->present;
      p["absent"] = node.presence_breakdown->absent;
      n["presence"] = std::move(p);
    }
    nodes.push_back(std::move(n));
  }
  root["nodes"] = std::move(nodes);
  njson edges = njson::array();
  for (const Edge& e : g.edges) {
    njson j;
    j["src"] = e.src;
    j["dst"] = e.dst;
    j["rel"] = to_string(e.relation);
    j["weight"] = e.weight;
    edges.push_back(std::move(j));
  }
  root["edges"] = std::move(edges);
  return root;
}

inline std::string serialize_graph(const KnowledgeGraph& g) {
  return graph_to_json(g).dump(2) + "\n";
}

inline void save_graph(const KnowledgeGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write graph file " + path.string());
  out << serialize_graph(g);
}

inline KnowledgeGraph graph_from_json(const njson& root) {
  if (!root.is_object() || !root.contains("nodes") || !root.contains("edges")) {
    fail(ErrorCode::MalformedGraphFile, "graph JSON needs \"nodes\" and \"edges\"");
  }
  if (!root.contains("version") || !root["version"].is_string()) {
    fail(ErrorCode::MalformedGraphFile, "graph JSON missing \"version\"");
  }
  if (root["version"].get<std::string>() != kGraphFormatVersion) {
    fail(ErrorCode::FormatVersionMismatch, "graph format version \"" +
                                               root["version"].get<std::string>() +
                                               "\", expected \"" + kGraphFormatVersion + "\"");
  }
  KnowledgeGraph g;
  try {
    if (root.contains("meta")) {
      const njson& meta = root["meta"];
      if (meta.contains("source_label")) g.meta.source_label = meta["source_label"];
      if (meta.contains("report_count")) g.meta.report_count = meta["report_count"];
      if (meta.contains("build_config")) {
        const njson& c = meta["build_config"];
        BuildConfig cfg;
        cfg.edge_min_count = c.value("edge_min_count", cfg.edge_min_count);
        cfg.merge_threshold = c.value("merge_threshold", cfg.merge_threshold);
        cfg.max_entity_words = c.value("max_entity_words", cfg.max_entity_words);
        cfg.include_absent = c.value("include_absent", cfg.include_absent);
        cfg.seed = c.value("seed", cfg.seed);
        g.meta.build_config = cfg;
      }
    }
    for (const njson& n : root["nodes"]) {
      Node node;
      node.node_id = n.at("id").get<int>();
      node.canonical_surface = n.at("surface").get<std::string>();
      auto type = entity_type_from(n.at("type").get<std::string>());
      if (!type) {
        fail(ErrorCode::MalformedGraphFile,
             "unknown node type \"" + n.at("type").get<std::string>() + "\"");
      }
      node.entity_type = *type;
      if (n.contains("cui")) node.cui = n["cui"].get<std::string>();
      node.weight = n.at("weight").get<std::int64_t>();
      if (n.contains("aliases")) {
        for (const njson& a : n["aliases"]) node.aliases.insert(a.get<std::string>());
      }
      if (node.aliases.empty()) node.aliases.insert(node.canonical_surface);
      if (n.contains("presence")) {
        PresenceBreakdown p;
        p.present = n["presence"].value("present", 0);
        p.absent = n["presence"].value("absent", 0);
        node.presence_breakdown = p;
      }
      g.nodes.push_back(std::move(node));
    }
    for (const njson& j : root["edges"]) {
      Edge e;
      e.src = j.at("src").get<int>();
      e.dst = j.at("dst").get<int>();
      auto rel = relation_type_from(j.at("rel").get<std::string>());
      if (!rel) {
        fail(ErrorCode::MalformedGraphFile,
             "unknown relation \"" + j.at("rel").get<std::string>() + "\"");
      }
      e.relation = *rel;
      e.weight = j.at("weight").get<std::int64_t>();
      g.edges.push_back(e);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedGraphFile, e.what());
  }
  std::vector<std::string> problems = check_graph(g);
  if (!problems.empty()) fail(ErrorCode::MalformedGraphFile, problems.front());
  return g;
}

inline KnowledgeGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open graph file " + path.string());
  njson root;
  try {
    root = njson::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedGraphFile, std::string("invalid JSON (") + e.what() + ")");
  }
  return graph_from_json(root);
}

// ---------------------------------------------------------------------------
// Export

enum class GraphFormat { Dot, GraphML, Csv };

inline std::optional<GraphFormat> graph_format_from(std::string_view s) {
  if (s == "dot") return GraphFormat::Dot;
  if (s == "graphml") return GraphFormat::GraphML;
  if (s == "csv") return GraphFormat::Csv;
  return std::nullopt;
}

inline std::string graph_to_dot(const KnowledgeGraph& g) {
  std::string out = "digraph rexkg {\n";
  for (const Node& n : g.nodes) {
    out += "  n" + std::to_string(n.node_id) + " [label=\"" + dot_escape(n.canonical_surface) +
           "\\n" + to_string(n.entity_type) + " w=" + std::to_string(n.weight) + "\"];\n";
  }
  for (const Edge& e : g.edges) {
    out += "  n" + std::to_string(e.src) + " -> n" + std::to_string(e.dst) + " [label=\"" +
           to_string(e.relation) + " w=" + std::to_string(e.weight) + "\"];\n";
  }
  out += "}\n";
  return out;
}

inline std::string graph_to_graphml(const KnowledgeGraph& g) {
  std::string out =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
      "  <key id=\"surface\" for=\"node\" attr.name=\"surface\" attr.type=\"string\"/>\n"
      "  <key id=\"type\" for=\"node\" attr.name=\"type\" attr.type=\"string\"/>\n"
      "  <key id=\"cui\" for=\"node\" attr.name=\"cui\" attr.type=\"string\"/>\n"
      "  <key id=\"weight\" for=\"node\" attr.name=\"weight\" attr.type=\"long\"/>\n"
      "  <key id=\"relation\" for=\"edge\" attr.name=\"relation\" attr.type=\"string\"/>\n"
      "  <key id=\"eweight\" for=\"edge\" attr.name=\"weight\" attr.type=\"long\"/>\n"
      "  <graph id=\"G\" edgedefault=\"directed\">\n";
  for (const Node& n : g.nodes) {
    out += "    <node id=\"n" + std::to_string(n.node_id) + "\">";
    out += "<data key=\"surface\">" + xml_escape(n.canonical_surface) + "</data>";
    out += std::string("<data key=\"type\">") + to_string(n.entity_type) + "</data>";
    if (n.cui) out += "<data key=\"cui\">" + xml_escape(*n.cui) + "</data>";
    out += "<data key=\"weight\">" + std::to_string(n.weight) + "</data>";
    out += "</node>\n";
  }
  for (const Edge& e : g.edges) {
    out += "    <edge source=\"n" + std::to_string(e.src) + "\" target=\"n" +
           std::to_string(e.dst) + "\">";
    out += std::string("<data key=\"relation\">") + to_string(e.relation) + "</data>";
    out += "<data key=\"eweight\">" + std::to_string(e.weight) + "</data>";
    out += "</edge>\n";
  }
  out += "  </graph>\n</graphml>\n";
  return out;
}

inline std::string graph_nodes_csv(const KnowledgeGraph& g) {
  std::string out = "node_id,surface,type,cui,weight\n";
  for (const Node& n : g.nodes) {
    out += std::to_string(n.node_id) + "," + csv_escape(n.canonical_surface) + "," +
           to_string(n.entity_type) + "," + csv_escape(n.cui.value_or("")) + "," +
           std::to_string(n.weight) + "\n";
  }
  return out;
}

inline std::string graph_edges_csv(const KnowledgeGraph& g) {
  std::string out = "src,dst,relation,weight\n";
  for (const Edge& e : g.edges) {
    out += std::to_string(e.src) + "," + std::to_string(e.dst) + "," + to_string(e.relation) +
           "," + std::to_string(e.weight) + "\n";
  }
  return out;
}

inline std::vector<std::filesystem::path> export_graph(const KnowledgeGraph& g,
                                                       GraphFormat format,
                                                       const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto write = [&](const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write " + p.string());
    out << content;
  };
  std::vector<std::filesystem::path> written;
  switch (format) {
    case GraphFormat::Dot:
      written.push_back(out_dir / "graph.dot");
      write(written.back(), graph_to_dot(g));
      break;
    case GraphFormat::GraphML:
      written.push_back(out_dir / "graph.graphml");
      write(written.back(), graph_to_graphml(g));
      break;
    case GraphFormat::Csv:
      written.push_back(out_dir / "nodes.csv");
      write(written.back(), graph_nodes_csv(g));
      written.push_back(out_dir / "edges.csv");
      write(written.back(), graph_edges_csv(g));
      break;
  }
  return written;
}

}  // namespace rexkg
