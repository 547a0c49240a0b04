#include <doctest.h>

#include <fstream>
#include <set>

#include "rexkg/rexkg.hpp"
#include "testutil.hpp"

using namespace rexkg;

namespace {

// A small fixed graph: 0 -(located_at,7)-> 1, 2 -(modify,3)-> 0.
KnowledgeGraph small_graph() {
  KnowledgeGraph g;
  g.meta.source_label = "small";
  Node lung{0, "lung", EntityType::Anatomy, "C0024109", 340, {"lung", "pulmonary"}, {}};
  Node edema{1, "edema", EntityType::Disorder, std::nullopt, 120, {"edema"},
             PresenceBreakdown{120, 0}};
  Node mild{2, "mild", EntityType::Concept, std::nullopt, 80, {"mild"}, {}};
  g.nodes = {lung, edema, mild};
  g.edges = {{0, 1, RelationType::LocatedAt, 7}, {2, 0, RelationType::Modify, 3}};
  return g;
}

KnowledgeGraph path_graph(int n) {
  KnowledgeGraph g;
  for (int i = 0; i < n; ++i) {
    g.nodes.push_back({i, "n" + std::to_string(i), EntityType::Anatomy, std::nullopt, 1,
                       {"n" + std::to_string(i)}, {}});
  }
  for (int i = 0; i + 1 < n; ++i) {
    g.edges.push_back({i, i + 1, RelationType::LocatedAt, 1});
  }
  return g;
}

}  // namespace

TEST_CASE("adjacency produces the weight matrix") {
  KnowledgeGraph g;
  g.nodes = {{0, "a", EntityType::Anatomy, std::nullopt, 1, {"a"}, {}},
             {1, "b", EntityType::Anatomy, std::nullopt, 1, {"b"}, {}}};
  g.edges = {{0, 1, RelationType::LocatedAt, 7}};
  AdjacencyView view = adjacency(g);
  CHECK(view.at(0, 1) == 7);
  CHECK(view.at(1, 0) == 0);
  CHECK(view.at(0, 0) == 0);
  CHECK(view.total() == 7);
}

TEST_CASE("adjacency masks by endpoint types") {
  KnowledgeGraph g;
  g.nodes = {{0, "tube", EntityType::Device, std::nullopt, 1, {"tube"}, {}},
             {1, "lung", EntityType::Anatomy, std::nullopt, 1, {"lung"}, {}}};
  g.edges = {{0, 1, RelationType::LocatedAt, 5}};
  AdjacencyView masked = adjacency(g, TypePair{EntityType::Disorder, EntityType::Anatomy});
  CHECK(masked.at(0, 1) == 0);
  AdjacencyView kept = adjacency(g, TypePair{EntityType::Device, EntityType::Anatomy});
  CHECK(kept.at(0, 1) == 5);
}

TEST_CASE("adjacency conserves total edge weight on random graphs") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    KnowledgeGraph g = testutil::random_graph(rng, 5, 20);
    std::int64_t weight_sum = 0;
    for (const Edge& e : g.edges) weight_sum += e.weight;
    CHECK(adjacency(g).total() == weight_sum);
  }
}

TEST_CASE("connected subgraphs of a path") {
  KnowledgeGraph g = path_graph(3);
  SUBCASE("k=2 is the edge list as unordered pairs") {
    auto subs = connected_subgraphs(g, 2);
    std::set<std::vector<int>> got(subs.begin(), subs.end());
    CHECK(got == std::set<std::vector<int>>({{0, 1}, {1, 2}}));
  }
  SUBCASE("k=3 keeps the full path even though ends are not adjacent") {
    auto subs = connected_subgraphs(g, 3);
    REQUIRE(subs.size() == 1);
    CHECK(subs[0] == std::vector<int>({0, 1, 2}));
  }
}

TEST_CASE("enumeration equals exhaustive subset filtering on random graphs") {
  std::mt19937_64 rng(5150);
  for (int trial = 0; trial < 25; ++trial) {
    KnowledgeGraph g = testutil::random_graph(rng, 10, 10, 0.2);
    for (int k : {2, 3}) {
      auto subs = connected_subgraphs(g, k);
      std::set<std::vector<int>> got(subs.begin(), subs.end());
      CHECK(got.size() == subs.size());  // duplicate-free
      CHECK(got == testutil::oracle_connected_subsets(g, k));
    }
  }
}

TEST_CASE("k=2 subgraph count equals the number of unordered adjacent pairs") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    KnowledgeGraph g = testutil::random_graph(rng, 4, 15, 0.3);
    std::set<std::pair<int, int>> pairs;
    for (const Edge& e : g.edges) {
      pairs.insert({std::min(e.src, e.dst), std::max(e.src, e.dst)});
    }
    CHECK(connected_subgraphs(g, 2).size() == pairs.size());
  }
}

TEST_CASE("enumeration enforces the cap") {
  KnowledgeGraph g = path_graph(20);
  try {
    connected_subgraphs(g, 2, 5);
    FAIL("expected SizeTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SizeTooLarge);
  }
}

TEST_CASE("graph save/load round-trips structurally and byte-wise") {
  KnowledgeGraph g = small_graph();
  g.meta.report_count = 42;
  g.meta.build_config = BuildConfig{};
  auto dir = testutil::temp_dir("graph");
  save_graph(g, dir / "g.json");
  KnowledgeGraph loaded = load_graph(dir / "g.json");
  CHECK(loaded == g);
  save_graph(loaded, dir / "g2.json");
  std::ifstream a(dir / "g.json"), b(dir / "g2.json");
  std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
}

TEST_CASE("builder output round-trips with stable bytes") {
  SynthSpec spec;
  spec.reports = 100;
  spec.seed = 55;
  SynthOutput out = generate(spec);
  KnowledgeGraph built = build_graph(out.corpus, out.lexicon, out.store, spec.build);
  auto dir = testutil::temp_dir("built_roundtrip");
  save_graph(built, dir / "built.json");
  KnowledgeGraph loaded = load_graph(dir / "built.json");
  CHECK(loaded == built);
  CHECK(serialize_graph(loaded) == serialize_graph(built));
}

TEST_CASE("graph loader rejects malformed files") {
  SUBCASE("missing edges") {
    njson root;
    root["version"] = "1";
    root["nodes"] = njson::array();
    try {
      graph_from_json(root);
      FAIL("expected MalformedGraphFile");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MalformedGraphFile);
    }
  }
  SUBCASE("version mismatch") {
    njson root = graph_to_json(small_graph());
    root["version"] = "2";
    try {
      graph_from_json(root);
      FAIL("expected FormatVersionMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::FormatVersionMismatch);
    }
  }
}

TEST_CASE("dot export lists every vertex and edge") {
  KnowledgeGraph g;
  g.nodes = {{0, "lung", EntityType::Anatomy, std::nullopt, 3, {"lung"}, {}}};
  std::string dot = graph_to_dot(g);
  CHECK(dot.find("n0 [label=\"lung") != std::string::npos);
  CHECK(dot.find("digraph") != std::string::npos);

  std::string full = graph_to_dot(small_graph());
  CHECK(full.find("n0 -> n1 [label=\"located_at w=7\"]") != std::string::npos);
}

TEST_CASE("csv export uses the declared headers") {
  auto dir = testutil::temp_dir("export");
  auto files = export_graph(small_graph(), GraphFormat::Csv, dir);
  REQUIRE(files.size() == 2);
  std::ifstream nodes(files[0]);
  std::string header;
  std::getline(nodes, header);
  CHECK(header == "node_id,surface,type,cui,weight");
  std::ifstream edges(files[1]);
  std::getline(edges, header);
  CHECK(header == "src,dst,relation,weight");
}

TEST_CASE("graphml re-import preserves node and edge counts") {
  std::mt19937_64 rng(31);
  KnowledgeGraph g = testutil::random_graph(rng, 8, 16);
  std::string xml = graph_to_graphml(g);
  // Generic reader: count <node and <edge elements.
  std::size_t nodes = 0, edges = 0, pos = 0;
  while ((pos = xml.find("<node ", pos)) != std::string::npos) {
    ++nodes;
    ++pos;
  }
  pos = 0;
  while ((pos = xml.find("<edge ", pos)) != std::string::npos) {
    ++edges;
    ++pos;
  }
  CHECK(nodes == g.nodes.size());
  CHECK(edges == g.edges.size());
}

TEST_CASE("the full adjacency view is lossless for weighted structure") {
  std::mt19937_64 rng(41);
  KnowledgeGraph g = testutil::random_graph(rng, 5, 15, 0.3);
  AdjacencyView view = adjacency(g);
  std::set<std::tuple<int, int, std::int64_t>> rebuilt, original;
  for (int i = 0; i < view.size(); ++i) {
    for (int j = 0; j < view.size(); ++j) {
      if (view.at(i, j) > 0) rebuilt.insert({i, j, view.at(i, j)});
    }
  }
  for (const Edge& e : g.edges) original.insert({e.src, e.dst, e.weight});
  CHECK(rebuilt == original);
}

TEST_CASE("adjacency falls back to sparse storage above the dense limit") {
  KnowledgeGraph g;
  int n = AdjacencyView::kDenseLimit + 10;
  for (int i = 0; i < n; ++i) {
    g.nodes.push_back({i, "n" + std::to_string(i), EntityType::Anatomy, std::nullopt, 1,
                       {"n" + std::to_string(i)}, {}});
  }
  g.edges = {{0, 1, RelationType::LocatedAt, 9}, {n - 2, n - 1, RelationType::Modify, 4}};
  AdjacencyView view = adjacency(g);
  CHECK(view.at(0, 1) == 9);
  CHECK(view.at(n - 2, n - 1) == 4);
  CHECK(view.at(1, 0) == 0);
  CHECK(view.total() == 13);
  std::vector<double> row = view.row(0);
  CHECK(row[1] == 9.0);
  CHECK(row[2] == 0.0);
}

TEST_CASE("enumeration order is deterministic") {
  std::mt19937_64 rng(43);
  KnowledgeGraph g = testutil::random_graph(rng, 8, 14, 0.3);
  CHECK(connected_subgraphs(g, 3) == connected_subgraphs(g, 3));
}

TEST_CASE("check_graph catches structural damage") {
  KnowledgeGraph g = small_graph();
  CHECK(check_graph(g).empty());
  g.edges.push_back({1, 1, RelationType::Modify, 2});
  CHECK(!check_graph(g).empty());
}
