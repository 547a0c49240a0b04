#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "rexkg/config.hpp"
#include "rexkg/corpus.hpp"
#include "rexkg/embed.hpp"
#include "rexkg/graph.hpp"
#include "rexkg/lexicon.hpp"
#include "rexkg/parallel.hpp"
#include "rexkg/text.hpp"

namespace rexkg {

struct SurfaceStats {
  std::int64_t total = 0;                     // included mentions of this surface
  std::array<std::int64_t, 6> by_type{};      // indexed by EntityType
  std::int64_t present = 0;
  std::int64_t absent = 0;
  EntityType resolved_type = EntityType::Anatomy;
};

// Per-surface observation counts over the corpus, keyed by normalized surface.
struct SurfaceLedger {
  std::map<std::string, SurfaceStats> surfaces;
  std::int64_t included_mentions = 0;
};

// A mention is excluded only when it asserts absence and absent mentions are
// not requested; everything else enters the graph.
inline bool mention_included(const EntityMention& m, const BuildConfig& cfg) {
  return cfg.include_absent || m.presence != Presence::Absent;
}

// Counts surfaces and assigns each its most frequently predicted entity type;
// ties resolve by the fixed type declaration order.
inline SurfaceLedger resolve_entity_types(const AnnotatedCorpus& corpus, const BuildConfig& cfg,
                                          int jobs = 1) {
  std::vector<SurfaceLedger> partial(static_cast<std::size_t>(jobs < 1 ? 1 : jobs));
  parallel_chunks(corpus.reports.size(), jobs, [&](std::size_t begin, std::size_t end, int chunk) {
    SurfaceLedger& local = partial[static_cast<std::size_t>(chunk)];
    for (std::size_t r = begin; r < end; ++r) {
      for (const EntityMention& m : corpus.reports[r].entities) {
        if (!mention_included(m, cfg)) continue;
        SurfaceStats& stats = local.surfaces[normalize_surface(m.text)];
        ++stats.total;
        ++stats.by_type[static_cast<std::size_t>(m.entity_type)];
        if (m.presence == Presence::Present) ++stats.present;
        if (m.presence == Presence::Absent) ++stats.absent;
        ++local.included_mentions;
      }
    }
  });

  SurfaceLedger ledger;
  for (SurfaceLedger& local : partial) {
    ledger.included_mentions += local.included_mentions;
    for (auto& [surface, stats] : local.surfaces) {
      SurfaceStats& merged = ledger.surfaces[surface];
      merged.total += stats.total;
      merged.present += stats.present;
      merged.absent += stats.absent;
      for (std::size_t t = 0; t < stats.by_type.size(); ++t) {
        merged.by_type[t] += stats.by_type[t];
      }
    }
  }
  for (auto& [surface, stats] : ledger.surfaces) {
    std::size_t best = 0;
    for (std::size_t t = 1; t < stats.by_type.size(); ++t) {
      if (stats.by_type[t] > stats.by_type[best]) best = t;
    }
    stats.resolved_type = static_cast<EntityType>(best);
  }
  return ledger;
}

// A set of surfaces merged into one node candidate.
struct AliasCluster {
  std::string canonical;  // highest-count member surface, ties lexicographic
  std::optional<std::string> cui;
  EntityType entity_type = EntityType::Anatomy;
  std::int64_t weight = 0;
  std::set<std::string> members;
  PresenceBreakdown presence;
};

namespace detail {

inline EntityType modal_type(const std::array<std::int64_t, 6>& counts) {
  std::size_t best = 0;
  for (std::size_t t = 1; t < counts.size(); ++t) {
    if (counts[t] > counts[best]) best = t;
  }
  return static_cast<EntityType>(best);
}

inline void sort_clusters(std::vector<AliasCluster>& clusters) {
  std::sort(clusters.begin(), clusters.end(),
            [](const AliasCluster& a, const AliasCluster& b) { return a.canonical < b.canonical; });
}

}  // namespace detail

// Groups surfaces sharing a lexicon concept id into one cluster; surfaces
// without a lexicon match are retained as singletons.
inline std::vector<AliasCluster> link_aliases(const SurfaceLedger& ledger,
                                              const Lexicon& lexicon) {
  struct Group {
    std::optional<std::string> cui;
    std::vector<const std::pair<const std::string, SurfaceStats>*> members;
  };
  std::map<std::string, Group> groups;  // key: cui or a per-surface sentinel
  for (const auto& entry : ledger.surfaces) {
    auto cui = lexicon.cui_of(entry.first);
    std::string key = cui ? "c:" + *cui : "s:" + entry.first;
    Group& group = groups[key];
    group.cui = cui;
    group.members.push_back(&entry);
  }

  std::vector<AliasCluster> clusters;
  clusters.reserve(groups.size());
  for (auto& [key, group] : groups) {
    AliasCluster cluster;
    cluster.cui = group.cui;
    std::array<std::int64_t, 6> type_counts{};
    const std::pair<const std::string, SurfaceStats>* top = nullptr;
    for (const auto* member : group.members) {
      const auto& [surface, stats] = *member;
      cluster.members.insert(surface);
      cluster.weight += stats.total;
      cluster.presence.present += stats.present;
      cluster.presence.absent += stats.absent;
      for (std::size_t t = 0; t < stats.by_type.size(); ++t) type_counts[t] += stats.by_type[t];
      if (top == nullptr || stats.total > top->second.total ||
          (stats.total == top->second.total && surface < top->first)) {
        top = member;
      }
    }
    cluster.canonical = top->first;
    cluster.entity_type = detail::modal_type(type_counts);
    clusters.push_back(std::move(cluster));
  }
  detail::sort_clusters(clusters);
  return clusters;
}

// Node integration: drop clusters below the count threshold, then process
// word-count groups ascending; a multi-word surface becomes a node only when
// at least one of its words is not already a single-word node.
inline std::vector<AliasCluster> integrate_nodes(std::vector<AliasCluster> clusters,
                                                 const BuildConfig& cfg) {
  std::map<std::size_t, std::vector<AliasCluster>> by_word_count;
  for (AliasCluster& cluster : clusters) {
    if (cluster.weight < cfg.edge_min_count) continue;
    std::size_t words = word_count(cluster.canonical);
    if (words == 0 || words > static_cast<std::size_t>(cfg.max_entity_words)) continue;
    by_word_count[words].push_back(std::move(cluster));
  }

  std::vector<AliasCluster> nodes;
  std::set<std::string> unigrams;
  for (auto& [words, group] : by_word_count) {
    detail::sort_clusters(group);
    for (AliasCluster& cluster : group) {
      if (words == 1) {
        unigrams.insert(cluster.canonical);
        nodes.push_back(std::move(cluster));
        continue;
      }
      bool all_words_are_nodes = true;
      for (const std::string& word : split_words(cluster.canonical)) {
        if (unigrams.count(word) == 0) {
          all_words_are_nodes = false;
          break;
        }
      }
      if (!all_words_are_nodes) nodes.push_back(std::move(cluster));
    }
  }
  detail::sort_clusters(nodes);
  return nodes;
}

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }

  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

// Merges nodes of the same entity type whose canonical surfaces embed within
// the merge threshold; transitive via union-find.
inline std::vector<AliasCluster> semantic_merge(std::vector<AliasCluster> nodes,
                                                const EmbeddingStore& store,
                                                const BuildConfig& cfg) {
  detail::sort_clusters(nodes);
  detail::UnionFind uf(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      if (nodes[i].entity_type != nodes[j].entity_type) continue;
      if (term_similarity(nodes[i].canonical, nodes[j].canonical, store) >=
          cfg.merge_threshold) {
        uf.unite(i, j);
      }
    }
  }

  std::map<std::size_t, std::vector<std::size_t>> components;
  for (std::size_t i = 0; i < nodes.size(); ++i) components[uf.find(i)].push_back(i);

  std::vector<AliasCluster> merged;
  merged.reserve(components.size());
  for (auto& [root, member_ids] : components) {
    // Heaviest member wins the canonical surface and, when it has one, the cui.
    std::sort(member_ids.begin(), member_ids.end(), [&nodes](std::size_t a, std::size_t b) {
      if (nodes[a].weight != nodes[b].weight) return nodes[a].weight > nodes[b].weight;
      return nodes[a].canonical < nodes[b].canonical;
    });
    AliasCluster out;
    out.canonical = nodes[member_ids.front()].canonical;
    out.entity_type = nodes[member_ids.front()].entity_type;
    for (std::size_t id : member_ids) {
      const AliasCluster& member = nodes[id];
      out.weight += member.weight;
      out.members.insert(member.members.begin(), member.members.end());
      out.presence.present += member.presence.present;
      out.presence.absent += member.presence.absent;
      if (!out.cui && member.cui) out.cui = member.cui;
    }
    merged.push_back(std::move(out));
  }
  detail::sort_clusters(merged);
  return merged;
}

// Aggregates relation mentions into weighted edges: per (src,dst) pair the
// majority relation type survives, the weight sums over all relation types,
// and pairs below the count threshold or collapsed to self-loops are dropped.
inline std::vector<Edge> build_edges(const AnnotatedCorpus& corpus,
                                     const std::unordered_map<std::string, int>& surface_to_node,
                                     const BuildConfig& cfg, int jobs = 1) {
  using PairCounts = std::map<std::pair<int, int>, std::array<std::int64_t, 3>>;
  std::vector<PairCounts> partial(static_cast<std::size_t>(jobs < 1 ? 1 : jobs));
  parallel_chunks(corpus.reports.size(), jobs, [&](std::size_t begin, std::size_t end, int chunk) {
    PairCounts& local = partial[static_cast<std::size_t>(chunk)];
    std::unordered_map<std::string, const EntityMention*> by_id;
    for (std::size_t r = begin; r < end; ++r) {
      const AnnotatedReport& report = corpus.reports[r];
      by_id.clear();
      for (const EntityMention& m : report.entities) by_id[m.mention_id] = &m;
      for (const RelationMention& rel : report.relations) {
        auto src_it = by_id.find(rel.source_id);
        auto dst_it = by_id.find(rel.target_id);
        if (src_it == by_id.end() || dst_it == by_id.end()) continue;
        if (!mention_included(*src_it->second, cfg) || !mention_included(*dst_it->second, cfg)) {
          continue;
        }
        auto src_node = surface_to_node.find(normalize_surface(src_it->second->text));
        auto dst_node = surface_to_node.find(normalize_surface(dst_it->second->text));
        if (src_node == surface_to_node.end() || dst_node == surface_to_node.end()) continue;
        if (src_node->second == dst_node->second) continue;  // self-loop after merging
        local[{src_node->second, dst_node->second}]
             [static_cast<std::size_t>(rel.relation_type)]++;
      }
    }
  });

  PairCounts counts;
  for (PairCounts& local : partial) {
    for (const auto& [pair, rels] : local) {
      std::array<std::int64_t, 3>& merged = counts[pair];
      for (std::size_t i = 0; i < rels.size(); ++i) merged[i] += rels[i];
    }
  }

  std::vector<Edge> edges;
  for (const auto& [pair, rels] : counts) {
    std::int64_t weight = rels[0] + rels[1] + rels[2];
    if (weight < cfg.edge_min_count) continue;
    std::size_t best = 0;
    for (std::size_t i = 1; i < rels.size(); ++i) {
      if (rels[i] > rels[best]) best = i;
    }
    edges.push_back({pair.first, pair.second, static_cast<RelationType>(best), weight});
  }
  return edges;
}

// The full node and edge construction pipeline. Deterministic for fixed
// inputs and config, including under report reordering and any jobs count.
inline KnowledgeGraph build_graph(const AnnotatedCorpus& corpus, const Lexicon& lexicon,
                                  const EmbeddingStore& store, const BuildConfig& cfg,
                                  std::vector<std::string>* warnings = nullptr, int jobs = 1) {
  SurfaceLedger ledger = resolve_entity_types(corpus, cfg, jobs);
  std::vector<AliasCluster> clusters = link_aliases(ledger, lexicon);
  clusters = integrate_nodes(std::move(clusters), cfg);
  clusters = semantic_merge(std::move(clusters), store, cfg);

  KnowledgeGraph graph;
  graph.meta.source_label = corpus.source_label;
  graph.meta.report_count = static_cast<std::int64_t>(corpus.reports.size());
  graph.meta.build_config = cfg;

  std::unordered_map<std::string, int> surface_to_node;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    AliasCluster& cluster = clusters[i];
    Node node;
    node.node_id = static_cast<int>(i);
    node.canonical_surface = cluster.canonical;
    node.entity_type = cluster.entity_type;
    node.cui = cluster.cui;
    node.weight = cluster.weight;
    node.aliases = std::move(cluster.members);
    if (presence_applies(node.entity_type)) node.presence_breakdown = cluster.presence;
    for (const std::string& member : node.aliases) {
      surface_to_node[member] = node.node_id;
    }
    graph.nodes.push_back(std::move(node));
  }

  graph.edges = build_edges(corpus, surface_to_node, cfg, jobs);
  std::sort(graph.edges.begin(), graph.edges.end(), [](const Edge& a, const Edge& b) {
    return std::pair(a.src, a.dst) < std::pair(b.src, b.dst);
  });

  if (graph.nodes.empty() && warnings != nullptr) {
    warnings->push_back("EmptyGraph: no node survived construction");
  }
  return graph;
}

}  // namespace rexkg
