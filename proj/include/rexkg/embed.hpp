#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rexkg/errors.hpp"
#include "rexkg/text.hpp"

namespace rexkg {

// Unit-normalized term vectors keyed by normalized surface. Immutable after
// load; similarity queries are pure and safe to run in parallel.
struct EmbeddingStore {
  enum class Provenance { LocalFile, RemoteService };

  int dimension = 0;
  std::map<std::string, std::vector<double>> vectors;
  Provenance provenance = Provenance::LocalFile;
  std::string source;
  // Counts term_similarity calls that fell back to exact-string matching
  // because at least one term had no vector.
  std::shared_ptr<std::atomic<std::uint64_t>> fallback_hits =
      std::make_shared<std::atomic<std::uint64_t>>(0);

  bool empty() const { return vectors.empty(); }
  std::size_t size() const { return vectors.size(); }

  const std::vector<double>* find(std::string_view term) const {
    auto it = vectors.find(normalize_surface(term));
    return it == vectors.end() ? nullptr : &it->second;
  }

  // Normalizes the term key and the vector; rejects duplicates, dimension
  // drift, and vectors that cannot be normalized.
  void add(std::string_view term, std::vector<double> vec, std::size_t line_no = 0) {
    std::string key = normalize_surface(term);
    auto where = [line_no] {
      return line_no == 0 ? std::string() : " at line " + std::to_string(line_no);
    };
    if (key.empty()) fail(ErrorCode::MalformedLine, "empty term" + where());
    if (vec.empty()) fail(ErrorCode::DimensionMismatch, "empty vector" + where());
    if (dimension == 0) {
      dimension = static_cast<int>(vec.size());
    } else if (static_cast<int>(vec.size()) != dimension) {
      fail(ErrorCode::DimensionMismatch,
           "vector of length " + std::to_string(vec.size()) + " in a store of dimension " +
               std::to_string(dimension) + where());
    }
    double norm_sq = 0.0;
    for (double x : vec) norm_sq += x * x;
    if (norm_sq == 0.0) fail(ErrorCode::ZeroVector, "zero vector for term \"" + key + "\"");
    // Skip the division for already-unit vectors so normalization is
    // idempotent and serialized stores round-trip bit-exactly.
    if (std::abs(norm_sq - 1.0) > 1e-12) {
      double inv = 1.0 / std::sqrt(norm_sq);
      for (double& x : vec) x *= inv;
    }
    auto [it, inserted] = vectors.emplace(std::move(key), std::move(vec));
    if (!inserted) fail(ErrorCode::DuplicateTerm, "duplicate term \"" + it->first + "\"");
  }

  friend bool operator==(const EmbeddingStore& a, const EmbeddingStore& b) {
    return a.dimension == b.dimension && a.vectors == b.vectors;
  }
};

inline EmbeddingStore parse_vectors_stream(std::istream& in, std::string source) {
  EmbeddingStore store;
  store.source = std::move(source);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      fail(ErrorCode::MalformedLine,
           "line " + std::to_string(line_no) + ": expected term<TAB>floats");
    }
    std::vector<double> vec;
    const char* p = line.c_str() + tab + 1;
    char* end = nullptr;
    while (*p != '\0') {
      double v = std::strtod(p, &end);
      if (end == p) {
        fail(ErrorCode::MalformedLine,
             "line " + std::to_string(line_no) + ": bad float near \"" + std::string(p) + "\"");
      }
      vec.push_back(v);
      p = end;
      while (*p == ' ') ++p;
    }
    store.add(line.substr(0, tab), std::move(vec), line_no);
  }
  return store;
}

inline EmbeddingStore load_vectors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open vector file " + path.string());
  return parse_vectors_stream(in, path.string());
}

// TSV with 17 significant digits so values round-trip bit-exactly.
inline std::string serialize_vectors(const EmbeddingStore& store) {
  std::string out;
  char buf[64];
  for (const auto& [term, vec] : store.vectors) {
    out += term;
    char sep = '\t';
    for (double v : vec) {
      out.push_back(sep);
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out += buf;
      sep = ' ';
    }
    out.push_back('\n');
  }
  return out;
}

inline void save_vectors(const EmbeddingStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write vector file " + path.string());
  out << serialize_vectors(store);
}

inline double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    fail(ErrorCode::DimensionMismatch, "cosine of vectors with lengths " +
                                           std::to_string(u.size()) + " and " +
                                           std::to_string(v.size()));
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) fail(ErrorCode::ZeroVector, "cosine of a zero vector");
  return std::clamp(dot / std::sqrt(nu * nv), -1.0, 1.0);
}

// Similarity in [0,1]: clamped cosine when both terms are embedded, exact
// string match otherwise (the weakest sound fallback, counted per call).
inline double term_similarity(std::string_view a, std::string_view b,
                              const EmbeddingStore& store) {
  std::string ka = normalize_surface(a);
  std::string kb = normalize_surface(b);
  auto ia = store.vectors.find(ka);
  auto ib = store.vectors.find(kb);
  if (ia != store.vectors.end() && ib != store.vectors.end()) {
    return std::clamp(cosine(ia->second, ib->second), 0.0, 1.0);
  }
  if (store.fallback_hits) store.fallback_hits->fetch_add(1, std::memory_order_relaxed);
  return ka == kb ? 1.0 : 0.0;
}

// Argmax of term_similarity over the candidates; ties resolve to the
// lexicographically smallest surface, so the result does not depend on
// candidate iteration order.
inline std::pair<std::string, double> best_match(std::string_view query,
                                                 std::span<const std::string> candidates,
                                                 const EmbeddingStore& store) {
  if (candidates.empty()) fail(ErrorCode::EmptyCandidateSet, "best_match over no candidates");
  const std::string* best = nullptr;
  double best_score = -1.0;
  for (const std::string& candidate : candidates) {
    double score = term_similarity(query, candidate, store);
    if (best == nullptr || score > best_score ||
        (score == best_score && candidate < *best)) {
      best = &candidate;
      best_score = score;
    }
  }
  return {*best, best_score};
}

}  // namespace rexkg
