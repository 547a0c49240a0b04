// Acceptance suite. Each criterion prints one [PASS]/[FAIL] line; the ctest
// verdict comes from the same flags. Tolerances are pinned in the checks.

#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rexkg/rexkg.hpp"
#include "testutil.hpp"

using namespace rexkg;

namespace {

struct Criterion {
  std::string label;
  std::vector<std::string> failures;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  explicit Criterion(std::string text) : label(std::move(text)) {}

  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 8) failures.push_back(what);
    if (!ok && failures.size() == 8) failures.push_back("...");
  }

  double elapsed_s() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }

  bool finish() {
    bool ok = failures.empty();
    char timing[32];
    std::snprintf(timing, sizeof(timing), "%.1fs", elapsed_s());
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << label << " (" << timing << ")\n";
    for (const std::string& f : failures) std::cout << "       " << f << "\n";
    std::cout.flush();
    return ok;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_CASE("criterion 1: identity suite") {
  Criterion c("criterion 1: compare(g,g) = 1.0 within 1e-9 on 100 random graphs, < 30 s");
  std::mt19937_64 rng(10001);
  EmbeddingStore store;
  for (int trial = 0; trial < 100; ++trial) {
    KnowledgeGraph g = testutil::random_graph(rng, 5, 50, 0.15);
    MetricsReport report = compare(g, g, store);
    c.expect(std::abs(report.nsc_all - 1.0) <= 1e-9,
             "trial " + std::to_string(trial) + ": NSC " + fmt(report.nsc_all));
    c.expect(std::abs(report.ams_all - 1.0) <= 1e-9,
             "trial " + std::to_string(trial) + ": AMS " + fmt(report.ams_all));
    c.expect(std::abs(report.scs - 1.0) <= 1e-9,
             "trial " + std::to_string(trial) + ": SCS " + fmt(report.scs));
  }
  c.expect(c.elapsed_s() < 30.0, "runtime " + fmt(c.elapsed_s()) + "s exceeds 30s");
  CHECK(c.finish());
}

TEST_CASE("criterion 2: metric formula oracles") {
  Criterion c(
      "criterion 2: pearson/kg_ams/importance/presence/kg_scs match brute force on 200+ "
      "instances each, tol 1e-10");
  std::mt19937_64 rng(10002);

  for (int trial = 0; trial < 220; ++trial) {
    std::size_t n = static_cast<std::size_t>(testutil::uniform_int(rng, 2, 12));
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = testutil::uniform_int(rng, 0, 30);
      b[i] = testutil::uniform_int(rng, 0, 30);
    }
    if (trial % 9 == 0) a.assign(n, 3.0);
    double got = pearson(a, b);
    double expected = testutil::oracle_pearson(a, b);
    c.expect(std::abs(got - expected) <= 1e-10,
             "pearson trial " + std::to_string(trial) + ": " + fmt(got) + " vs " + fmt(expected));
  }

  int ams_checked = 0;
  while (ams_checked < 220) {
    KnowledgeGraph gt = testutil::random_graph(rng, 3, 12, 0.35);
    KnowledgeGraph pred = gt;
    for (Edge& e : pred.edges) {
      if (testutil::unit(rng) < 0.5) e.weight = testutil::uniform_int(rng, 1, 40);
    }
    std::optional<TypePair> mask;
    if (ams_checked % 3 == 0) mask = TypePair{EntityType::Disorder, EntityType::Anatomy};
    double expected = testutil::oracle_ams(testutil::dense_matrix(gt),
                                           testutil::dense_matrix(pred),
                                           testutil::node_types(gt), mask);
    if (std::isnan(expected)) continue;
    double got = kg_ams(adjacency(gt), adjacency(pred), mask);
    c.expect(std::abs(got - expected) <= 1e-10,
             "kg_ams trial " + std::to_string(ams_checked) + ": " + fmt(got) + " vs " +
                 fmt(expected));
    ++ams_checked;
  }

  int importance_checked = 0, presence_checked = 0;
  while (importance_checked < 220 || presence_checked < 220) {
    KnowledgeGraph gt = testutil::random_graph(rng, 4, 12, 0.35);
    KnowledgeGraph pred = testutil::random_graph(rng, 3, 12, 0.35);
    auto matches = testutil::random_matches(rng, gt, pred);
    int k = testutil::uniform_int(rng, 2, 3);
    for (const auto& s : connected_subgraphs(gt, k)) {
      if (importance_checked < 220) {
        double got = subgraph_importance(s, gt);
        double expected = testutil::oracle_importance(s, gt);
        c.expect(std::abs(got - expected) <= 1e-10, "importance: " + fmt(got) + " vs " +
                                                        fmt(expected));
        ++importance_checked;
      }
      if (presence_checked < 220) {
        bool strict = (presence_checked % 4) == 0;
        double got = subgraph_presence(s, gt, pred, matches, strict);
        double expected = testutil::oracle_presence(s, gt, pred, matches, strict);
        c.expect(std::abs(got - expected) <= 1e-10,
                 "presence: " + fmt(got) + " vs " + fmt(expected));
        ++presence_checked;
      }
    }
  }

  for (int trial = 0; trial < 220; ++trial) {
    KnowledgeGraph gt = testutil::random_graph(rng, 4, 12, 0.35);
    KnowledgeGraph pred = testutil::random_graph(rng, 3, 12, 0.35);
    auto matches = testutil::random_matches(rng, gt, pred);
    CompareConfig cfg;
    cfg.k = 2;
    cfg.top_fraction =
        std::vector<double>{0.1, 0.25, 0.5, 1.0}[static_cast<std::size_t>(trial % 4)];
    double got = kg_scs(gt, pred, matches, cfg);
    double expected = testutil::oracle_scs(gt, pred, matches, cfg.k, cfg.top_fraction);
    c.expect(std::abs(got - expected) <= 1e-10,
             "kg_scs trial " + std::to_string(trial) + ": " + fmt(got) + " vs " + fmt(expected));
  }
  CHECK(c.finish());
}

TEST_CASE("criterion 3: subgraph enumeration oracle") {
  Criterion c("criterion 3: enumeration equals exhaustive subset filtering, k in {2,3}, 50+ graphs");
  std::mt19937_64 rng(10003);
  for (int trial = 0; trial < 60; ++trial) {
    KnowledgeGraph g = testutil::random_graph(rng, 10, 10, 0.25);
    for (int k : {2, 3}) {
      auto subs = connected_subgraphs(g, k);
      std::set<std::vector<int>> got(subs.begin(), subs.end());
      c.expect(got.size() == subs.size(),
               "trial " + std::to_string(trial) + " k=" + std::to_string(k) + ": duplicates");
      c.expect(got == testutil::oracle_connected_subsets(g, k),
               "trial " + std::to_string(trial) + " k=" + std::to_string(k) + ": set mismatch");
    }
  }
  CHECK(c.finish());
}

TEST_CASE("criterion 4: node integration suite") {
  Criterion c("criterion 4: node-integration hand traces + multi-word property on built graphs");

  BuildConfig cfg;
  cfg.edge_min_count = 5;
  auto cluster = [](const std::string& surface, EntityType type, std::int64_t weight) {
    AliasCluster a;
    a.canonical = surface;
    a.entity_type = type;
    a.weight = weight;
    a.members = {surface};
    return a;
  };
  auto surfaces_of = [](const std::vector<AliasCluster>& nodes) {
    std::set<std::string> out;
    for (const AliasCluster& n : nodes) out.insert(n.canonical);
    return out;
  };

  auto trace1 = integrate_nodes({cluster("lung", EntityType::Anatomy, 10),
                                 cluster("right", EntityType::Concept, 8),
                                 cluster("right lung", EntityType::Anatomy, 6)},
                                cfg);
  c.expect(surfaces_of(trace1) == std::set<std::string>({"lung", "right"}),
           "hand trace {lung,right,right lung} != {lung,right}");

  auto trace2 = integrate_nodes({cluster("pleural", EntityType::Anatomy, 15),
                                 cluster("pleural effusion", EntityType::Disorder, 20)},
                                cfg);
  c.expect(surfaces_of(trace2) == std::set<std::string>({"pleural", "pleural effusion"}),
           "hand trace {pleural, pleural effusion} lost a node");

  auto trace3 = integrate_nodes({cluster("impella", EntityType::Device, 3)}, cfg);
  c.expect(trace3.empty(), "count filter failed to drop impella:3 at C=5");

  // Property: in any built graph, every multi-word node keeps at least one
  // word that is not itself a unigram node.
  std::mt19937_64 rng(10004);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::string> words;
    for (int w = 0; w < 12; ++w) words.push_back("w" + std::to_string(trial) + "_" +
                                                 std::to_string(w));
    AnnotatedCorpus corpus;
    corpus.source_label = "a1";
    int report_idx = 0;
    auto add_mentions = [&](const std::string& surface, int count) {
      for (int i = 0; i < count; ++i) {
        AnnotatedReport report;
        report.report_id = "r" + std::to_string(report_idx++);
        report.sentences = {surface};
        report.entities.push_back({"e0", surface, EntityType::Anatomy,
                                   Presence::NotApplicable, 0, 0,
                                   static_cast<int>(surface.size())});
        corpus.reports.push_back(std::move(report));
      }
    };
    for (int w = 0; w < 12; ++w) add_mentions(words[static_cast<std::size_t>(w)],
                                              testutil::uniform_int(rng, 0, 12));
    for (int pair = 0; pair < 8; ++pair) {
      const std::string& a = words[static_cast<std::size_t>(testutil::uniform_int(rng, 0, 11))];
      const std::string& b = words[static_cast<std::size_t>(testutil::uniform_int(rng, 0, 11))];
      if (a == b) continue;
      add_mentions(a + " " + b, testutil::uniform_int(rng, 0, 12));
    }
    BuildConfig build_cfg;
    build_cfg.edge_min_count = testutil::uniform_int(rng, 1, 6);
    KnowledgeGraph g = build_graph(corpus, Lexicon{}, EmbeddingStore{}, build_cfg);
    std::set<std::string> unigrams;
    for (const Node& n : g.nodes) {
      if (word_count(n.canonical_surface) == 1) unigrams.insert(n.canonical_surface);
    }
    for (const Node& n : g.nodes) {
      std::vector<std::string> parts = split_words(n.canonical_surface);
      if (parts.size() < 2) continue;
      bool has_free_word = false;
      for (const std::string& word : parts) {
        if (unigrams.count(word) == 0) has_free_word = true;
      }
      c.expect(has_free_word, "multi-word node \"" + n.canonical_surface +
                                  "\" fully covered by unigram nodes");
    }
  }
  CHECK(c.finish());
}

TEST_CASE("criterion 5: construction conservation") {
  Criterion c("criterion 5: weight conservation, edge threshold, monotone C on 50 corpora");
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SynthSpec spec;
    spec.reports = 60 + static_cast<int>(seed % 7) * 20;
    spec.seed = seed;
    SynthOutput out = generate(spec);
    KnowledgeGraph g = build_graph(out.corpus, out.lexicon, out.store, spec.build);

    std::set<std::string> surviving;
    std::int64_t weight_sum = 0;
    for (const Node& n : g.nodes) {
      surviving.insert(n.aliases.begin(), n.aliases.end());
      weight_sum += n.weight;
    }
    std::int64_t recount = 0;
    for (const AnnotatedReport& report : out.corpus.reports) {
      for (const EntityMention& m : report.entities) {
        if (m.presence == Presence::Absent) continue;
        if (surviving.count(normalize_surface(m.text)) != 0) ++recount;
      }
    }
    c.expect(weight_sum == recount, "seed " + std::to_string(seed) + ": weight sum " +
                                        std::to_string(weight_sum) + " != recount " +
                                        std::to_string(recount));
    for (const Edge& e : g.edges) {
      c.expect(e.weight >= spec.build.edge_min_count,
               "seed " + std::to_string(seed) + ": edge below C");
    }

    std::size_t prev_nodes = SIZE_MAX, prev_edges = SIZE_MAX;
    for (int threshold : {1, 5, 10}) {
      BuildConfig cfg = spec.build;
      cfg.edge_min_count = threshold;
      KnowledgeGraph variant = build_graph(out.corpus, out.lexicon, out.store, cfg);
      c.expect(variant.nodes.size() <= prev_nodes,
               "seed " + std::to_string(seed) + ": node count grew when C rose");
      c.expect(variant.edges.size() <= prev_edges,
               "seed " + std::to_string(seed) + ": edge count grew when C rose");
      prev_nodes = variant.nodes.size();
      prev_edges = variant.edges.size();
    }
  }
  CHECK(c.finish());
}

TEST_CASE("criterion 6: report-count ablation trend") {
  Criterion c(
      "criterion 6: NSC/AMS/SCS non-decreasing over 100/1k/10k reports, 10k >= 0.95 of full, "
      "< 5 min");
  SynthSpec spec;
  spec.vocab_sizes = {{EntityType::Anatomy, 60}, {EntityType::Disorder, 80},
                      {EntityType::Concept, 50}, {EntityType::Device, 30},
                      {EntityType::Procedure, 20}, {EntityType::Size, 20}};
  spec.reports = 20000;
  spec.mentions_per_report = 8;
  spec.zipf_exponent = 0.8;
  spec.alias_groups = 6;
  spec.alias_group_size = 2;
  spec.seed = 600;
  SynthOutput out = generate(spec);

  KnowledgeGraph gt = build_graph(out.corpus, out.lexicon, out.store, spec.build);
  MetricsReport full = compare(gt, gt, out.store);

  std::vector<double> nsc, ams, scs;
  for (int size : {100, 1000, 10000}) {
    AnnotatedCorpus prefix;
    prefix.source_label = out.corpus.source_label;
    prefix.reports.assign(out.corpus.reports.begin(), out.corpus.reports.begin() + size);
    KnowledgeGraph pred = build_graph(prefix, out.lexicon, out.store, spec.build);
    MetricsReport report = compare(gt, pred, out.store);
    nsc.push_back(report.nsc_all);
    ams.push_back(report.ams_all);
    scs.push_back(report.scs);
  }
  std::cout << "       ablation NSC " << fmt(nsc[0]) << " -> " << fmt(nsc[1]) << " -> "
            << fmt(nsc[2]) << "\n       ablation AMS " << fmt(ams[0]) << " -> " << fmt(ams[1])
            << " -> " << fmt(ams[2]) << "\n       ablation SCS " << fmt(scs[0]) << " -> "
            << fmt(scs[1]) << " -> " << fmt(scs[2]) << "\n";

  for (std::size_t i = 1; i < 3; ++i) {
    c.expect(nsc[i] >= nsc[i - 1], "NSC not monotone at step " + std::to_string(i));
    c.expect(ams[i] >= ams[i - 1], "AMS not monotone at step " + std::to_string(i));
    c.expect(scs[i] >= scs[i - 1], "SCS not monotone at step " + std::to_string(i));
  }
  c.expect(nsc[2] >= 0.95 * full.nsc_all, "NSC(10k) " + fmt(nsc[2]) + " below 0.95 of full");
  c.expect(ams[2] >= 0.95 * full.ams_all, "AMS(10k) " + fmt(ams[2]) + " below 0.95 of full");
  c.expect(scs[2] >= 0.95 * full.scs, "SCS(10k) " + fmt(scs[2]) + " below 0.95 of full");
  c.expect(c.elapsed_s() < 300.0, "runtime " + fmt(c.elapsed_s()) + "s exceeds 5 min");
  CHECK(c.finish());
}

TEST_CASE("criterion 7: monotone damage") {
  Criterion c(
      "criterion 7: mean AMS and SCS strictly decrease with relation-drop p, NSC non-increasing, "
      "20 seeds (k=2, scored over all subgraphs)");
  std::vector<double> drops = {0.0, 0.25, 0.5, 0.75};
  std::vector<double> mean_nsc(drops.size(), 0.0), mean_ams(drops.size(), 0.0),
      mean_scs(drops.size(), 0.0);
  int seeds = 20;
  // SCS over every subgraph rather than the top decile: light damage lands in
  // the importance tail first, which the top-10% cut would hide.
  CompareConfig cfg;
  cfg.top_fraction = 1.0;
  for (int seed = 0; seed < seeds; ++seed) {
    SynthSpec spec;
    spec.reports = 250;
    spec.seed = 700 + static_cast<std::uint64_t>(seed);
    spec.build.edge_min_count = 3;
    SynthOutput out = generate(spec);
    KnowledgeGraph gt = build_graph(out.corpus, out.lexicon, out.store, spec.build);
    for (std::size_t i = 0; i < drops.size(); ++i) {
      AnnotatedCorpus damaged =
          perturb(out.corpus, 0.0, drops[i], spec.seed * 31 + static_cast<std::uint64_t>(i));
      KnowledgeGraph pred = build_graph(damaged, out.lexicon, out.store, spec.build);
      MetricsReport report = compare(gt, pred, out.store, cfg);
      mean_nsc[i] += report.nsc_all / seeds;
      mean_ams[i] += report.ams_all / seeds;
      mean_scs[i] += report.scs / seeds;
    }
  }
  std::cout << "       damage AMS " << fmt(mean_ams[0]) << " " << fmt(mean_ams[1]) << " "
            << fmt(mean_ams[2]) << " " << fmt(mean_ams[3]) << "\n       damage SCS "
            << fmt(mean_scs[0]) << " " << fmt(mean_scs[1]) << " " << fmt(mean_scs[2]) << " "
            << fmt(mean_scs[3]) << "\n";
  for (std::size_t i = 1; i < drops.size(); ++i) {
    c.expect(mean_ams[i] < mean_ams[i - 1], "mean AMS not strictly decreasing at p=" +
                                                fmt(drops[i]));
    c.expect(mean_scs[i] < mean_scs[i - 1], "mean SCS not strictly decreasing at p=" +
                                                fmt(drops[i]));
    c.expect(mean_nsc[i] <= mean_nsc[i - 1] + 1e-12,
             "mean NSC increased at p=" + fmt(drops[i]));
  }
  CHECK(c.finish());
}

TEST_CASE("criterion 8: determinism of build and compare") {
  Criterion c("criterion 8: byte-identical reruns and --jobs 1 vs --jobs 8, manifest hashes equal");
  SynthSpec spec;
  spec.reports = 200;
  spec.seed = 800;
  SynthOutput out = generate(spec);
  auto dir = testutil::temp_dir("accept8");
  save_corpus(out.corpus, dir / "corpus.jsonl");
  save_lexicon(out.lexicon, dir / "lexicon.jsonl");
  save_vectors(out.store, dir / "vectors.tsv");

  auto run = [&](const std::string& args) {
    std::string command = std::string(REXKG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    return WEXITSTATUS(std::system(command.c_str()));
  };
  std::string base = "build --corpus " + (dir / "corpus.jsonl").string() + " --lexicon " +
                     (dir / "lexicon.jsonl").string() + " --embeddings " +
                     (dir / "vectors.tsv").string();
  c.expect(run("--jobs 1 " + base + " --out " + (dir / "a.json").string()) == 0, "build 1 failed");
  c.expect(run("--jobs 1 " + base + " --out " + (dir / "b.json").string()) == 0, "build 2 failed");
  c.expect(run("--jobs 8 " + base + " --out " + (dir / "c.json").string()) == 0, "build 3 failed");
  std::string a = slurp(dir / "a.json");
  c.expect(!a.empty() && a == slurp(dir / "b.json"), "rerun bytes differ");
  c.expect(a == slurp(dir / "c.json"), "--jobs 8 bytes differ");

  njson ma = njson::parse(slurp(dir / "a.json.manifest.json"));
  njson mb = njson::parse(slurp(dir / "b.json.manifest.json"));
  njson mc = njson::parse(slurp(dir / "c.json.manifest.json"));
  c.expect(ma["outputs"]["graph"]["fnv1a64"] == mb["outputs"]["graph"]["fnv1a64"],
           "manifest hash differs between reruns");
  c.expect(ma["outputs"]["graph"]["fnv1a64"] == mc["outputs"]["graph"]["fnv1a64"],
           "manifest hash differs under --jobs 8");

  std::string cbase = "compare --gt " + (dir / "a.json").string() + " --pred " +
                      (dir / "a.json").string() + " --embeddings " +
                      (dir / "vectors.tsv").string();
  c.expect(run("--jobs 1 " + cbase + " --out " + (dir / "r1.json").string()) == 0,
           "compare 1 failed");
  c.expect(run("--jobs 1 " + cbase + " --out " + (dir / "r2.json").string()) == 0,
           "compare 2 failed");
  c.expect(run("--jobs 8 " + cbase + " --out " + (dir / "r8.json").string()) == 0,
           "compare 3 failed");
  std::string r1 = slurp(dir / "r1.json");
  c.expect(!r1.empty() && r1 == slurp(dir / "r2.json"), "compare rerun bytes differ");
  c.expect(r1 == slurp(dir / "r8.json"), "compare --jobs 8 bytes differ");
  CHECK(c.finish());
}

TEST_CASE("criterion 9: merge-threshold insensitivity") {
  Criterion c(
      "criterion 9: thresholds 0.90 and 0.95 produce identical merged node sets at intra 0.97");
  for (std::uint64_t seed : {900ull, 901ull, 902ull}) {
    SynthSpec spec;
    spec.reports = 300;
    spec.seed = seed;
    spec.alias_groups = 4;
    spec.alias_group_size = 2;
    spec.intra_cluster_similarity = 0.97;
    SynthOutput out = generate(spec);

    // Empty lexicon: merging is purely embedding-driven.
    Lexicon none;
    BuildConfig low = spec.build, high = spec.build;
    low.merge_threshold = 0.90;
    high.merge_threshold = 0.95;
    KnowledgeGraph g_low = build_graph(out.corpus, none, out.store, low);
    KnowledgeGraph g_high = build_graph(out.corpus, none, out.store, high);
    c.expect(g_low.nodes == g_high.nodes,
             "seed " + std::to_string(seed) + ": node sets differ between thresholds");
    c.expect(g_low.edges == g_high.edges,
             "seed " + std::to_string(seed) + ": edge sets differ between thresholds");

    // The merges really happened: alias-group members share one node.
    bool merged_groups = true;
    for (const Node& n : g_high.nodes) {
      if (n.aliases.count("ana0") != 0 && n.aliases.count("ana1") == 0) merged_groups = false;
    }
    c.expect(merged_groups, "seed " + std::to_string(seed) + ": embedding merge did not fire");
  }
  CHECK(c.finish());
}

TEST_CASE("criterion 10: format round-trips") {
  Criterion c("criterion 10: corpus/lexicon/vectors/graph satisfy load(save(x)) = x, 100+ each");
  std::mt19937_64 rng(11000);
  auto dir = testutil::temp_dir("accept10");

  for (int trial = 0; trial < 100; ++trial) {
    SynthSpec spec;
    spec.reports = 5 + trial % 20;
    spec.seed = static_cast<std::uint64_t>(trial);
    spec.alias_groups = trial % 3;
    AnnotatedCorpus corpus = generate(spec).corpus;
    save_corpus(corpus, dir / "c.jsonl");
    AnnotatedCorpus reloaded = parse_corpus(dir / "c.jsonl");
    c.expect(reloaded.reports == corpus.reports,
             "corpus round-trip failed at trial " + std::to_string(trial));
  }

  for (int trial = 0; trial < 100; ++trial) {
    Lexicon lexicon;
    int entries = testutil::uniform_int(rng, 0, 10);
    for (int e = 0; e < entries; ++e) {
      LexiconEntry entry;
      entry.cui = "C" + std::to_string(trial) + "_" + std::to_string(e);
      entry.canonical_name = "name" + std::to_string(trial) + "_" + std::to_string(e);
      if (e % 2 == 0) entry.definition = "definition " + std::to_string(e);
      entry.tuis = {"T" + std::to_string(e % 5)};
      entry.aliases = {"alias" + std::to_string(trial) + "_" + std::to_string(e)};
      lexicon.add_entry(std::move(entry));
    }
    save_lexicon(lexicon, dir / "l.jsonl");
    c.expect(load_lexicon(dir / "l.jsonl") == lexicon,
             "lexicon round-trip failed at trial " + std::to_string(trial));
  }

  for (int trial = 0; trial < 100; ++trial) {
    EmbeddingStore store;
    int dim = testutil::uniform_int(rng, 2, 16);
    int terms = testutil::uniform_int(rng, 1, 12);
    for (int t = 0; t < terms; ++t) {
      std::vector<double> v(static_cast<std::size_t>(dim));
      for (double& x : v) x = testutil::unit(rng) * 2 - 1;
      store.add("term" + std::to_string(t), std::move(v));
    }
    save_vectors(store, dir / "v.tsv");
    c.expect(load_vectors(dir / "v.tsv") == store,
             "vector round-trip failed at trial " + std::to_string(trial));
  }

  for (int trial = 0; trial < 100; ++trial) {
    KnowledgeGraph g = testutil::random_graph(rng, 2, 20, 0.3);
    g.meta.source_label = "roundtrip" + std::to_string(trial);
    g.meta.report_count = trial;
    if (trial % 2 == 0) g.meta.build_config = BuildConfig{};
    if (trial % 3 == 0 && !g.nodes.empty()) {
      g.nodes[0].cui = "C999";
      g.nodes[0].presence_breakdown = PresenceBreakdown{3, 1};
      g.nodes[0].aliases.insert("extra alias");
    }
    save_graph(g, dir / "g.json");
    c.expect(load_graph(dir / "g.json") == g,
             "graph round-trip failed at trial " + std::to_string(trial));
  }
  CHECK(c.finish());
}
