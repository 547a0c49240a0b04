// rexkg: build, compare, and analyze report knowledge graphs from the
// command line. Every run writes a manifest with input/output content hashes
// so results are replayable.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rexkg/embed_remote.hpp"
#include "rexkg/rexkg.hpp"

namespace fs = std::filesystem;
using rexkg::njson;

namespace {

struct CommonOptions {
  int jobs = 1;
  int verbosity = 0;
};

void print_warnings(const std::vector<std::string>& warnings, int verbosity) {
  if (verbosity <= 0 && warnings.size() > 10) {
    std::cerr << "warning: " << warnings.size() << " warnings (rerun with -v to see all)\n";
    return;
  }
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

njson build_config_json(const rexkg::BuildConfig& cfg) {
  njson j;
  j["edge_min_count"] = cfg.edge_min_count;
  j["merge_threshold"] = cfg.merge_threshold;
  j["max_entity_words"] = cfg.max_entity_words;
  j["include_absent"] = cfg.include_absent;
  j["seed"] = cfg.seed;
  return j;
}

njson compare_config_json(const rexkg::CompareConfig& cfg) {
  njson j;
  j["k"] = cfg.k;
  j["top_fraction"] = cfg.top_fraction;
  j["strict_presence_edges"] = cfg.strict_presence_edges;
  return j;
}

// Opt-in remote embeddings: when REXKG_EMBED_URL is set, fetch vectors for
// the given terms through the write-through cache and merge them into the
// store. Offline runs never enter this path.
void maybe_fetch_remote(rexkg::EmbeddingStore& store, const std::vector<std::string>& terms,
                        const fs::path& cache_path, int verbosity) {
  const char* url = std::getenv("REXKG_EMBED_URL");
  if (url == nullptr || *url == '\0' || terms.empty()) return;
  std::vector<std::string> missing;
  for (const std::string& term : terms) {
    if (store.find(term) == nullptr) missing.push_back(term);
  }
  if (missing.empty()) return;
  if (verbosity > 0) {
    std::cerr << "fetching " << missing.size() << " vectors from " << url << "\n";
  }
  auto fetched = rexkg::fetch_remote(missing, url, cache_path, store.dimension);
  for (auto& [term, vec] : fetched) {
    if (store.find(term) == nullptr) store.add(term, std::move(vec));
  }
  store.provenance = rexkg::EmbeddingStore::Provenance::RemoteService;
}

int cmd_validate(const fs::path& corpus_path, const CommonOptions& common) {
  std::vector<std::string> warnings;
  rexkg::AnnotatedCorpus corpus = rexkg::parse_corpus(corpus_path, &warnings);
  print_warnings(warnings, common.verbosity);
  std::vector<rexkg::Violation> violations = rexkg::validate_corpus(corpus);
  for (const rexkg::Violation& v : violations) {
    std::cout << v.report_id << "\t" << v.field << "\t" << v.rule << "\t" << v.detail << "\n";
  }
  rexkg::CorpusStats stats = rexkg::corpus_stats(corpus);
  std::cout << "reports: " << stats.report_count << "\n";
  for (const auto& [type, count] : stats.mentions_by_type) {
    std::cout << "mentions[" << rexkg::to_string(type) << "]: " << count << "\n";
  }
  for (const auto& [rel, count] : stats.relations_by_type) {
    std::cout << "relations[" << rexkg::to_string(rel) << "]: " << count << "\n";
  }
  std::cout << "distinct surfaces: " << stats.surface_counts.size() << "\n";
  return violations.empty() ? 0 : 1;
}

int cmd_build(const fs::path& corpus_path, const std::optional<fs::path>& lexicon_path,
              const std::optional<fs::path>& embeddings_path, const fs::path& out_path,
              const fs::path& cache_path, const rexkg::BuildConfig& cfg,
              const CommonOptions& common) {
  std::vector<std::string> warnings;
  rexkg::AnnotatedCorpus corpus = rexkg::parse_corpus(corpus_path, &warnings);

  rexkg::Lexicon lexicon;
  if (lexicon_path) lexicon = rexkg::load_lexicon(*lexicon_path);
  rexkg::EmbeddingStore store;
  if (embeddings_path) store = rexkg::load_vectors(*embeddings_path);

  std::vector<std::string> surfaces;
  {
    std::set<std::string> distinct;
    for (const auto& report : corpus.reports) {
      for (const auto& mention : report.entities) {
        distinct.insert(rexkg::normalize_surface(mention.text));
      }
    }
    surfaces.assign(distinct.begin(), distinct.end());
  }
  maybe_fetch_remote(store, surfaces, cache_path, common.verbosity);

  rexkg::KnowledgeGraph graph =
      rexkg::build_graph(corpus, lexicon, store, cfg, &warnings, common.jobs);
  print_warnings(warnings, common.verbosity);
  rexkg::save_graph(graph, out_path);

  rexkg::Manifest manifest("build");
  manifest.add_input("corpus", corpus_path);
  if (lexicon_path) manifest.add_input("lexicon", *lexicon_path);
  if (embeddings_path) manifest.add_input("embeddings", *embeddings_path);
  njson config = build_config_json(cfg);
  config["jobs"] = common.jobs;
  manifest.set_config(std::move(config));
  manifest.add_output("graph", out_path);
  manifest.save(out_path.string() + ".manifest.json");

  std::cout << "nodes: " << graph.nodes.size() << "\nedges: " << graph.edges.size() << "\n"
            << "graph: " << out_path.string() << "\n";
  return 0;
}

int cmd_compare(const fs::path& gt_path, const fs::path& pred_path,
                const std::optional<fs::path>& embeddings_path, const fs::path& out_path,
                const std::optional<fs::path>& csv_path, const fs::path& cache_path,
                const rexkg::CompareConfig& cfg, const CommonOptions& common) {
  rexkg::KnowledgeGraph gt = rexkg::load_graph(gt_path);
  rexkg::KnowledgeGraph pred = rexkg::load_graph(pred_path);
  rexkg::EmbeddingStore store;
  if (embeddings_path) store = rexkg::load_vectors(*embeddings_path);

  std::vector<std::string> surfaces;
  for (const rexkg::Node& n : gt.nodes) surfaces.push_back(n.canonical_surface);
  for (const rexkg::Node& n : pred.nodes) surfaces.push_back(n.canonical_surface);
  maybe_fetch_remote(store, surfaces, cache_path, common.verbosity);

  rexkg::MetricsReport report = rexkg::compare(gt, pred, store, cfg, common.jobs);
  {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) rexkg::fail(rexkg::ErrorCode::IoError, "cannot write " + out_path.string());
    out << rexkg::serialize_metrics_report(report);
  }
  if (csv_path) {
    bool fresh = !fs::exists(*csv_path) || fs::file_size(*csv_path) == 0;
    std::ofstream csv(*csv_path, std::ios::binary | std::ios::app);
    if (!csv) rexkg::fail(rexkg::ErrorCode::IoError, "cannot write " + csv_path->string());
    if (fresh) csv << rexkg::metrics_csv_header(report);
    csv << rexkg::metrics_csv_row(report);
  }

  rexkg::Manifest manifest("compare");
  manifest.add_input("gt", gt_path);
  manifest.add_input("pred", pred_path);
  if (embeddings_path) manifest.add_input("embeddings", *embeddings_path);
  njson config = compare_config_json(cfg);
  config["jobs"] = common.jobs;
  manifest.set_config(std::move(config));
  manifest.add_output("report", out_path);
  manifest.save(out_path.string() + ".manifest.json");

  std::cout << "nsc_all: " << report.nsc_all << "\nams_all: " << report.ams_all
            << "\nscs: " << report.scs << "\nreport: " << out_path.string() << "\n";
  return 0;
}

// Default query lists for analyze when none are given: heaviest nodes of the
// wanted type, capped at 20.
std::vector<std::string> top_surfaces(const rexkg::KnowledgeGraph& graph, rexkg::EntityType type,
                                      std::size_t limit = 20) {
  std::vector<const rexkg::Node*> nodes;
  for (const rexkg::Node& n : graph.nodes) {
    if (n.entity_type == type) nodes.push_back(&n);
  }
  std::sort(nodes.begin(), nodes.end(), [](const rexkg::Node* a, const rexkg::Node* b) {
    if (a->weight != b->weight) return a->weight > b->weight;
    return a->canonical_surface < b->canonical_surface;
  });
  if (nodes.size() > limit) nodes.resize(limit);
  std::vector<std::string> out;
  for (const rexkg::Node* n : nodes) out.push_back(n->canonical_surface);
  return out;
}

int cmd_analyze(const fs::path& graph_path, const fs::path& categories_path,
                std::vector<std::string> concepts, std::vector<std::string> disorders,
                const fs::path& out_dir, const CommonOptions& common) {
  rexkg::KnowledgeGraph graph = rexkg::load_graph(graph_path);
  rexkg::ConceptCategoryMap map = rexkg::load_category_map(categories_path);
  fs::create_directories(out_dir);

  if (concepts.empty()) concepts = top_surfaces(graph, rexkg::EntityType::Concept);
  if (disorders.empty()) disorders = top_surfaces(graph, rexkg::EntityType::Disorder);

  auto write = [](const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) rexkg::fail(rexkg::ErrorCode::IoError, "cannot write " + p.string());
    out << content;
  };

  std::vector<std::string> warnings;
  rexkg::Manifest manifest("analyze");
  manifest.add_input("graph", graph_path);
  manifest.add_input("categories", categories_path);
  njson config;
  config["concepts"] = concepts;
  config["disorders"] = disorders;
  manifest.set_config(std::move(config));

  for (rexkg::EntityType target :
       {rexkg::EntityType::Disorder, rexkg::EntityType::Anatomy}) {
    std::string name = std::string("concept_usage_") + rexkg::to_string(target) + ".csv";
    try {
      auto usage = rexkg::concept_usage(graph, map, target);
      write(out_dir / name, rexkg::concept_usage_csv(usage));
      manifest.add_output(name, out_dir / name);
    } catch (const rexkg::Error& e) {
      if (e.code() != rexkg::ErrorCode::NoTargetNodes) throw;
      warnings.push_back(std::string("skipping ") + name + ": " + e.what());
    }
  }

  rexkg::CoverageMatrix concept_matrix =
      rexkg::concept_disorder_matrix(graph, concepts, disorders, &warnings);
  write(out_dir / "concept_disorder_coverage.csv", concept_matrix.to_csv());
  manifest.add_output("concept_disorder_coverage.csv", out_dir / "concept_disorder_coverage.csv");

  rexkg::CoverageMatrix size_matrix = rexkg::size_coverage(graph, disorders, &warnings);
  write(out_dir / "size_coverage.csv", size_matrix.to_csv());
  manifest.add_output("size_coverage.csv", out_dir / "size_coverage.csv");

  write(out_dir / "frequency.csv", rexkg::frequency_csv(rexkg::frequency_report(graph, map)));
  manifest.add_output("frequency.csv", out_dir / "frequency.csv");

  print_warnings(warnings, common.verbosity);
  manifest.save(out_dir / "manifest.json");
  std::cout << "analysis written to " << out_dir.string() << "\n";
  return 0;
}

int cmd_export(const fs::path& graph_path, const std::string& format_str,
               const fs::path& out_dir) {
  auto format = rexkg::graph_format_from(format_str);
  if (!format) {
    rexkg::fail(rexkg::ErrorCode::UnsupportedFormat, "unsupported format \"" + format_str + "\"");
  }
  rexkg::KnowledgeGraph graph = rexkg::load_graph(graph_path);
  std::vector<fs::path> written = rexkg::export_graph(graph, *format, out_dir);

  rexkg::Manifest manifest("export");
  manifest.add_input("graph", graph_path);
  njson config;
  config["format"] = format_str;
  manifest.set_config(std::move(config));
  for (const fs::path& p : written) manifest.add_output(p.filename().string(), p);
  manifest.save(out_dir / "manifest.json");
  for (const fs::path& p : written) std::cout << p.string() << "\n";
  return 0;
}

int cmd_synth(const fs::path& spec_path, const fs::path& out_dir) {
  rexkg::SynthSpec spec = rexkg::load_synth_spec(spec_path);
  rexkg::SynthOutput output = rexkg::generate(spec);
  fs::create_directories(out_dir);
  rexkg::save_corpus(output.corpus, out_dir / "corpus.jsonl");
  rexkg::save_lexicon(output.lexicon, out_dir / "lexicon.jsonl");
  rexkg::save_vectors(output.store, out_dir / "vectors.tsv");
  rexkg::save_graph(output.expected, out_dir / "expected_graph.json");

  rexkg::Manifest manifest("synth");
  manifest.add_input("spec", spec_path);
  njson config;
  config["seed"] = spec.seed;
  config["reports"] = spec.reports;
  manifest.set_config(std::move(config));
  manifest.add_output("corpus", out_dir / "corpus.jsonl");
  manifest.add_output("lexicon", out_dir / "lexicon.jsonl");
  manifest.add_output("vectors", out_dir / "vectors.tsv");
  manifest.add_output("expected_graph", out_dir / "expected_graph.json");
  manifest.save(out_dir / "manifest.json");
  std::cout << "reports: " << output.corpus.reports.size()
            << "\nexpected nodes: " << output.expected.nodes.size()
            << "\nexpected edges: " << output.expected.edges.size() << "\nwritten to "
            << out_dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Report knowledge graph construction and evaluation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Config file with option defaults");

  CommonOptions common;
  app.add_option("--jobs", common.jobs, "Worker thread cap")->capture_default_str();
  app.add_flag("-v,--verbose", common.verbosity, "Verbose diagnostics");

  // validate
  fs::path corpus_path;
  CLI::App* validate = app.add_subcommand("validate", "Parse and validate a corpus");
  validate->add_option("--corpus", corpus_path, "Corpus JSONL")->required();

  // build
  fs::path build_corpus, build_out, build_cache = "rexkg_embed_cache.tsv";
  std::string build_lexicon, build_embeddings;
  rexkg::BuildConfig build_cfg;
  CLI::App* build = app.add_subcommand("build", "Construct a knowledge graph from a corpus");
  build->add_option("--corpus", build_corpus, "Corpus JSONL")->required();
  build->add_option("--lexicon", build_lexicon, "Lexicon JSONL");
  build->add_option("--embeddings", build_embeddings, "Vector TSV");
  build->add_option("--merge-threshold", build_cfg.merge_threshold, "Semantic merge threshold")
      ->capture_default_str();
  build->add_option("--edge-min-count", build_cfg.edge_min_count, "Count threshold C")
      ->capture_default_str();
  build->add_option("--max-entity-words", build_cfg.max_entity_words,
                    "Maximum words per entity surface")
      ->capture_default_str();
  build->add_flag("--include-absent", build_cfg.include_absent,
                  "Include absent disorder/device mentions");
  build->add_option("--embed-cache", build_cache, "Write-through cache for remote vectors")
      ->capture_default_str();
  build->add_option("--out", build_out, "Output graph JSON")->required();

  // compare
  fs::path gt_path, pred_path, compare_out, compare_cache = "rexkg_embed_cache.tsv";
  std::string compare_embeddings, compare_csv;
  rexkg::CompareConfig compare_cfg;
  CLI::App* cmp = app.add_subcommand("compare", "Compare two knowledge graphs");
  cmp->add_option("--gt", gt_path, "Ground-truth graph JSON")->required();
  cmp->add_option("--pred", pred_path, "Predicted graph JSON")->required();
  cmp->add_option("--embeddings", compare_embeddings, "Vector TSV");
  cmp->add_option("--k", compare_cfg.k, "Subgraph size")->capture_default_str();
  cmp->add_option("--top-frac", compare_cfg.top_fraction, "Top subgraph fraction")
      ->capture_default_str();
  cmp->add_flag("--strict-presence", compare_cfg.strict_presence_edges,
                "Presence edges must match direction and relation");
  cmp->add_option("--csv", compare_csv, "Append a summary row to this CSV");
  cmp->add_option("--embed-cache", compare_cache, "Write-through cache for remote vectors")
      ->capture_default_str();
  cmp->add_option("--out", compare_out, "Output report JSON")->required();

  // analyze
  fs::path analyze_graph, analyze_categories, analyze_out;
  std::vector<std::string> analyze_concepts, analyze_disorders;
  CLI::App* analyze = app.add_subcommand("analyze", "Concept and coverage analyses");
  analyze->add_option("--graph", analyze_graph, "Graph JSON")->required();
  analyze->add_option("--categories", analyze_categories, "Concept category CSV")->required();
  analyze->add_option("--concepts", analyze_concepts, "Concept surfaces")->delimiter(',');
  analyze->add_option("--disorders", analyze_disorders, "Disorder surfaces")->delimiter(',');
  analyze->add_option("--out", analyze_out, "Output directory")->required();

  // export
  fs::path export_graph_path, export_out;
  std::string export_format;
  CLI::App* exp = app.add_subcommand("export", "Export a graph to dot/graphml/csv");
  exp->add_option("--graph", export_graph_path, "Graph JSON")->required();
  exp->add_option("--format", export_format, "dot|graphml|csv")->required();
  exp->add_option("--out", export_out, "Output directory")->required();

  // synth
  fs::path synth_spec, synth_out;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic corpus with oracle graph");
  synth->add_option("--spec", synth_spec, "Synth spec JSON")->required();
  synth->add_option("--out", synth_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(validate)) return cmd_validate(corpus_path, common);
    if (app.got_subcommand(build)) {
      return cmd_build(build_corpus,
                       build_lexicon.empty() ? std::nullopt
                                             : std::optional<fs::path>(build_lexicon),
                       build_embeddings.empty() ? std::nullopt
                                                : std::optional<fs::path>(build_embeddings),
                       build_out, build_cache, build_cfg, common);
    }
    if (app.got_subcommand(cmp)) {
      return cmd_compare(gt_path, pred_path,
                         compare_embeddings.empty() ? std::nullopt
                                                    : std::optional<fs::path>(compare_embeddings),
                         compare_out,
                         compare_csv.empty() ? std::nullopt : std::optional<fs::path>(compare_csv),
                         compare_cache, compare_cfg, common);
    }
    if (app.got_subcommand(analyze)) {
      return cmd_analyze(analyze_graph, analyze_categories, analyze_concepts, analyze_disorders,
                         analyze_out, common);
    }
    if (app.got_subcommand(exp)) return cmd_export(export_graph_path, export_format, export_out);
    if (app.got_subcommand(synth)) return cmd_synth(synth_spec, synth_out);
  } catch (const rexkg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
