#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "rexkg/builder.hpp"
#include "rexkg/config.hpp"
#include "rexkg/corpus.hpp"
#include "rexkg/embed.hpp"
#include "rexkg/graph.hpp"
#include "rexkg/lexicon.hpp"

namespace rexkg {

// Synthetic corpus parameters. Everything is derived from the seed; the same
// spec reproduces byte-identical corpus, lexicon, vectors, and expected graph.
struct SynthSpec {
  std::map<EntityType, int> vocab_sizes = {
      {EntityType::Anatomy, 12}, {EntityType::Disorder, 14}, {EntityType::Concept, 10},
      {EntityType::Device, 6},   {EntityType::Procedure, 4}, {EntityType::Size, 4},
  };
  int reports = 100;
  int mentions_per_report = 8;
  double zipf_exponent = 1.0;  // surface frequency ~ 1/(rank+1)^z within a type
  int alias_groups = 2;        // surfaces sharing a synthetic CUI
  int alias_group_size = 2;
  double intra_cluster_similarity = 0.97;
  // Probability of a relation per ordered mention-type pair in a report.
  std::map<TypePair, double> relation_density = {
      {{EntityType::Concept, EntityType::Disorder}, 0.4},
      {{EntityType::Concept, EntityType::Anatomy}, 0.3},
      {{EntityType::Disorder, EntityType::Anatomy}, 0.5},
      {{EntityType::Device, EntityType::Anatomy}, 0.4},
      {{EntityType::Disorder, EntityType::Disorder}, 0.2},
      {{EntityType::Size, EntityType::Disorder}, 0.4},
  };
  std::uint64_t seed = 0;
  BuildConfig build;  // the stated config the expected graph is computed for
};

struct SynthOutput {
  AnnotatedCorpus corpus;
  Lexicon lexicon;
  EmbeddingStore store;
  KnowledgeGraph expected;  // build_graph(corpus, lexicon, store, spec.build)
};

namespace detail {

// Uniform double in [0,1) from raw generator words; avoids the
// implementation-defined std::uniform_real_distribution.
inline double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

inline std::size_t pick_cumulative(const std::vector<double>& cumulative, double u) {
  double target = u * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  std::size_t idx = static_cast<std::size_t>(it - cumulative.begin());
  return std::min(idx, cumulative.size() - 1);
}

inline const char* type_prefix(EntityType t) {
  switch (t) {
    case EntityType::Anatomy: return "ana";
    case EntityType::Disorder: return "dis";
    case EntityType::Concept: return "con";
    case EntityType::Device: return "dev";
    case EntityType::Procedure: return "pro";
    case EntityType::Size: return "siz";
  }
  return "x";
}

inline RelationType synth_relation_for(EntityType src, EntityType dst) {
  if (src == EntityType::Concept || src == EntityType::Size) return RelationType::Modify;
  if (src == EntityType::Disorder && dst == EntityType::Disorder) {
    return RelationType::SuggestiveOf;
  }
  (void)dst;
  return RelationType::LocatedAt;
}

}  // namespace detail

inline SynthOutput generate(const SynthSpec& spec) {
  struct Surface {
    std::string text;
    EntityType type;
    int cluster = -1;
  };

  // Vocabulary: one-word surfaces prefixed by type.
  std::vector<Surface> surfaces;
  std::map<EntityType, std::vector<std::size_t>> by_type;
  for (EntityType type : kEntityTypes) {
    auto it = spec.vocab_sizes.find(type);
    int count = it == spec.vocab_sizes.end() ? 0 : it->second;
    for (int i = 0; i < count; ++i) {
      by_type[type].push_back(surfaces.size());
      surfaces.push_back({detail::type_prefix(type) + std::to_string(i), type, -1});
    }
  }

  // Alias groups: consecutive surfaces carved from the front of each type's
  // vocabulary, never spanning types.
  std::vector<std::vector<std::size_t>> groups;
  for (EntityType type : kEntityTypes) {
    const std::vector<std::size_t>& vocab = by_type[type];
    std::size_t next = 0;
    while (static_cast<int>(groups.size()) < spec.alias_groups &&
           next + static_cast<std::size_t>(spec.alias_group_size) <= vocab.size()) {
      std::vector<std::size_t> group;
      for (int j = 0; j < spec.alias_group_size; ++j) group.push_back(vocab[next++]);
      groups.push_back(std::move(group));
    }
    if (static_cast<int>(groups.size()) >= spec.alias_groups) break;
  }

  // Cluster assignment: alias groups first, then singletons.
  int cluster_count = 0;
  for (const auto& group : groups) {
    for (std::size_t s : group) surfaces[s].cluster = cluster_count;
    ++cluster_count;
  }
  for (Surface& s : surfaces) {
    if (s.cluster < 0) s.cluster = cluster_count++;
  }

  SynthOutput out;

  // Lexicon over the alias groups only.
  for (std::size_t g = 0; g < groups.size(); ++g) {
    LexiconEntry entry;
    char cui[24];
    std::snprintf(cui, sizeof(cui), "S%04zu", g);
    entry.cui = cui;
    entry.canonical_name = surfaces[groups[g].front()].text;
    entry.tuis = {"T000"};
    for (std::size_t i = 1; i < groups[g].size(); ++i) {
      entry.aliases.push_back(surfaces[groups[g][i]].text);
    }
    out.lexicon.add_entry(std::move(entry));
  }

  // Embeddings: member vector = sqrt(s) on its cluster's axis plus
  // sqrt(1 - s) on its own axis, so intra-cluster pairwise cosine is exactly
  // the configured similarity and cross-cluster cosine is exactly zero. A
  // seeded coordinate permutation and sign flip keep inner products intact
  // while scrambling the raw coordinates.
  std::mt19937_64 rng(spec.seed);
  int dimension = cluster_count + static_cast<int>(surfaces.size());
  std::vector<int> perm(static_cast<std::size_t>(dimension));
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::swap(perm[i - 1], perm[rng() % i]);
  }
  std::vector<double> sign(static_cast<std::size_t>(dimension));
  for (double& s : sign) s = (rng() & 1) ? 1.0 : -1.0;
  double c = std::sqrt(spec.intra_cluster_similarity);
  double d = std::sqrt(1.0 - spec.intra_cluster_similarity);
  for (std::size_t s = 0; s < surfaces.size(); ++s) {
    std::vector<double> vec(static_cast<std::size_t>(dimension), 0.0);
    std::size_t center = static_cast<std::size_t>(perm[static_cast<std::size_t>(surfaces[s].cluster)]);
    std::size_t own = static_cast<std::size_t>(perm[static_cast<std::size_t>(cluster_count) + s]);
    vec[center] = c * sign[center];
    vec[own] = d * sign[own];
    out.store.add(surfaces[s].text, std::move(vec));
  }

  // Zipf cumulative weights per type and type-pick cumulative.
  std::map<EntityType, std::vector<double>> zipf;
  std::vector<double> type_cumulative;
  std::vector<EntityType> typed;
  double type_total = 0.0;
  for (EntityType type : kEntityTypes) {
    const auto& vocab = by_type[type];
    if (vocab.empty()) continue;
    std::vector<double> cumulative;
    double total = 0.0;
    for (std::size_t r = 0; r < vocab.size(); ++r) {
      total += std::pow(static_cast<double>(r + 1), -spec.zipf_exponent);
      cumulative.push_back(total);
    }
    zipf[type] = std::move(cumulative);
    type_total += static_cast<double>(vocab.size());
    type_cumulative.push_back(type_total);
    typed.push_back(type);
  }
  if (typed.empty() && spec.reports > 0 && spec.mentions_per_report > 0) {
    throw std::invalid_argument("synth spec has an empty vocabulary");
  }

  // Pass 1: emit reports, counting surfaces and cluster-level triplets.
  std::vector<std::int64_t> surface_counts(surfaces.size(), 0);
  std::map<std::pair<int, int>, std::pair<RelationType, std::int64_t>> triplets;
  out.corpus.source_label = "corpus";
  char report_id[24];
  for (int r = 0; r < spec.reports; ++r) {
    AnnotatedReport report;
    std::snprintf(report_id, sizeof(report_id), "r%06d", r);
    report.report_id = report_id;

    std::vector<std::size_t> picked;
    std::string sentence;
    for (int m = 0; m < spec.mentions_per_report; ++m) {
      EntityType type = typed[detail::pick_cumulative(type_cumulative, detail::next_unit(rng))];
      std::size_t rank = detail::pick_cumulative(zipf[type], detail::next_unit(rng));
      std::size_t s = by_type[type][rank];
      picked.push_back(s);
      ++surface_counts[s];

      EntityMention mention;
      mention.mention_id = "e" + std::to_string(m);
      mention.text = surfaces[s].text;
      mention.entity_type = type;
      mention.presence = presence_applies(type) ? Presence::Present : Presence::NotApplicable;
      mention.sentence_index = 0;
      if (!sentence.empty()) sentence.push_back(' ');
      mention.char_start = static_cast<int>(sentence.size());
      sentence += mention.text;
      mention.char_end = static_cast<int>(sentence.size());
      report.entities.push_back(std::move(mention));
    }
    report.sentences.push_back(std::move(sentence));

    for (std::size_t i = 0; i < picked.size(); ++i) {
      for (std::size_t j = i + 1; j < picked.size(); ++j) {
        EntityType ti = surfaces[picked[i]].type;
        EntityType tj = surfaces[picked[j]].type;
        std::size_t src = i, dst = j;
        auto density = spec.relation_density.find({ti, tj});
        if (density == spec.relation_density.end()) {
          density = spec.relation_density.find({tj, ti});
          if (density == spec.relation_density.end()) continue;
          std::swap(src, dst);
        }
        if (detail::next_unit(rng) >= density->second) continue;
        EntityType src_type = surfaces[picked[src]].type;
        EntityType dst_type = surfaces[picked[dst]].type;
        RelationType rel = detail::synth_relation_for(src_type, dst_type);
        report.relations.push_back({"e" + std::to_string(src), "e" + std::to_string(dst), rel});
        int ca = surfaces[picked[src]].cluster;
        int cb = surfaces[picked[dst]].cluster;
        if (ca == cb) continue;  // becomes a self-loop after merging
        auto& slot = triplets[{ca, cb}];
        slot.first = rel;
        ++slot.second;
      }
    }
    out.corpus.reports.push_back(std::move(report));
  }

  // Pass 2: the expected graph, from the counts gathered above.
  struct ClusterAgg {
    std::string canonical;
    std::optional<std::string> cui;
    EntityType type = EntityType::Anatomy;
    std::int64_t weight = 0;
    std::set<std::string> members;
  };
  std::vector<ClusterAgg> clusters(static_cast<std::size_t>(cluster_count));
  for (std::size_t s = 0; s < surfaces.size(); ++s) {
    if (surface_counts[s] == 0) continue;
    ClusterAgg& agg = clusters[static_cast<std::size_t>(surfaces[s].cluster)];
    agg.type = surfaces[s].type;
    agg.weight += surface_counts[s];
    agg.members.insert(surfaces[s].text);
    if (agg.canonical.empty()) agg.canonical = surfaces[s].text;
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    ClusterAgg& agg = clusters[g];
    char cui[24];
    std::snprintf(cui, sizeof(cui), "S%04zu", g);
    agg.cui = cui;
    // Canonical: highest-count member, ties lexicographic.
    std::int64_t best = -1;
    for (std::size_t s : groups[g]) {
      if (surface_counts[s] == 0) continue;
      if (surface_counts[s] > best ||
          (surface_counts[s] == best && surfaces[s].text < agg.canonical)) {
        best = surface_counts[s];
        agg.canonical = surfaces[s].text;
      }
    }
  }

  std::vector<int> cluster_to_node(static_cast<std::size_t>(cluster_count), -1);
  std::vector<std::size_t> alive;
  for (std::size_t c2 = 0; c2 < clusters.size(); ++c2) {
    if (clusters[c2].weight >= spec.build.edge_min_count) alive.push_back(c2);
  }
  std::sort(alive.begin(), alive.end(), [&clusters](std::size_t a, std::size_t b) {
    return clusters[a].canonical < clusters[b].canonical;
  });
  out.expected.meta.source_label = out.corpus.source_label;
  out.expected.meta.report_count = spec.reports;
  out.expected.meta.build_config = spec.build;
  for (std::size_t idx = 0; idx < alive.size(); ++idx) {
    ClusterAgg& agg = clusters[alive[idx]];
    Node node;
    node.node_id = static_cast<int>(idx);
    node.canonical_surface = agg.canonical;
    node.entity_type = agg.type;
    node.cui = agg.cui;
    node.weight = agg.weight;
    node.aliases = std::move(agg.members);
    if (presence_applies(agg.type)) {
      node.presence_breakdown = PresenceBreakdown{agg.weight, 0};
    }
    cluster_to_node[alive[idx]] = node.node_id;
    out.expected.nodes.push_back(std::move(node));
  }
  for (const auto& [pair, rel_count] : triplets) {
    if (rel_count.second < spec.build.edge_min_count) continue;
    int src = cluster_to_node[static_cast<std::size_t>(pair.first)];
    int dst = cluster_to_node[static_cast<std::size_t>(pair.second)];
    if (src < 0 || dst < 0) continue;
    out.expected.edges.push_back({src, dst, rel_count.first, rel_count.second});
  }
  std::sort(out.expected.edges.begin(), out.expected.edges.end(),
            [](const Edge& a, const Edge& b) {
              return std::pair(a.src, a.dst) < std::pair(b.src, b.dst);
            });
  return out;
}

// Independently drops mentions and relations with the given probabilities;
// relations also vanish when either endpoint mention was dropped.
inline AnnotatedCorpus perturb(const AnnotatedCorpus& corpus, double drop_entity_p,
                               double drop_relation_p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  AnnotatedCorpus out;
  out.source_label = corpus.source_label;
  out.reports.reserve(corpus.reports.size());
  for (const AnnotatedReport& report : corpus.reports) {
    AnnotatedReport kept;
    kept.report_id = report.report_id;
    kept.sentences = report.sentences;
    std::unordered_set<std::string> kept_ids;
    for (const EntityMention& m : report.entities) {
      if (detail::next_unit(rng) < drop_entity_p) continue;
      kept_ids.insert(m.mention_id);
      kept.entities.push_back(m);
    }
    for (const RelationMention& rel : report.relations) {
      bool dropped = detail::next_unit(rng) < drop_relation_p;
      if (dropped) continue;
      if (kept_ids.count(rel.source_id) == 0 || kept_ids.count(rel.target_id) == 0) continue;
      kept.relations.push_back(rel);
    }
    out.reports.push_back(std::move(kept));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spec file form

inline SynthSpec synth_spec_from_json(const njson& root) {
  SynthSpec spec;
  if (root.contains("vocab")) {
    spec.vocab_sizes.clear();
    for (const auto& [key, value] : root["vocab"].items()) {
      auto type = entity_type_from(key);
      if (!type) fail(ErrorCode::UnknownEntityType, "synth vocab type \"" + key + "\"");
      spec.vocab_sizes[*type] = value.get<int>();
    }
  }
  spec.reports = root.value("reports", spec.reports);
  spec.mentions_per_report = root.value("mentions_per_report", spec.mentions_per_report);
  spec.zipf_exponent = root.value("zipf_exponent", spec.zipf_exponent);
  spec.alias_groups = root.value("alias_groups", spec.alias_groups);
  spec.alias_group_size = root.value("alias_group_size", spec.alias_group_size);
  spec.intra_cluster_similarity =
      root.value("intra_cluster_similarity", spec.intra_cluster_similarity);
  if (root.contains("relation_density")) {
    spec.relation_density.clear();
    for (const auto& [key, value] : root["relation_density"].items()) {
      std::size_t sep = key.find('_');
      if (sep == std::string::npos) {
        fail(ErrorCode::MalformedLine, "relation_density key \"" + key + "\"");
      }
      auto src = entity_type_from(key.substr(0, sep));
      auto dst = entity_type_from(key.substr(sep + 1));
      if (!src || !dst) fail(ErrorCode::UnknownEntityType, "relation_density key \"" + key + "\"");
      spec.relation_density[{*src, *dst}] = value.get<double>();
    }
  }
  spec.seed = root.value("seed", spec.seed);
  if (root.contains("build")) {
    const njson& b = root["build"];
    spec.build.edge_min_count = b.value("edge_min_count", spec.build.edge_min_count);
    spec.build.merge_threshold = b.value("merge_threshold", spec.build.merge_threshold);
    spec.build.max_entity_words = b.value("max_entity_words", spec.build.max_entity_words);
    spec.build.include_absent = b.value("include_absent", spec.build.include_absent);
    spec.build.seed = b.value("seed", spec.build.seed);
  }
  return spec;
}

inline SynthSpec load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open synth spec " + path.string());
  njson root;
  try {
    root = njson::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedLine, std::string("invalid synth spec JSON (") + e.what() + ")");
  }
  return synth_spec_from_json(root);
}

}  // namespace rexkg
