#pragma once

// Remote embedding provider. Split from embed.hpp so only the CLI and the
// tests that exercise the network path pay for the httplib include.

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "rexkg/embed.hpp"
#include "rexkg/errors.hpp"

namespace rexkg {

namespace detail {
inline std::mutex& remote_cache_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

// POST {endpoint}/embed with {"terms": [...]}; expects
// {"dimension": d, "vectors": [[...], ...]} aligned with the request order.
// Fetched vectors are written through to cache_path (vector TSV) so reruns
// are offline-reproducible; terms already cached are not re-requested.
// Cache reads and writes are serialized across threads.
inline std::map<std::string, std::vector<double>> fetch_remote(
    const std::vector<std::string>& terms, const std::string& endpoint,
    const std::filesystem::path& cache_path, int expected_dimension = 0) {
  if (terms.empty()) fail(ErrorCode::EmptyCandidateSet, "fetch_remote with no terms");
  std::lock_guard<std::mutex> lock(detail::remote_cache_mutex());

  EmbeddingStore cache;
  if (std::filesystem::exists(cache_path)) {
    cache = load_vectors(cache_path);
    cache.provenance = EmbeddingStore::Provenance::RemoteService;
  }
  if (expected_dimension > 0 && cache.dimension > 0 && cache.dimension != expected_dimension) {
    fail(ErrorCode::DimensionMismatch,
         "cache dimension " + std::to_string(cache.dimension) + " != expected " +
             std::to_string(expected_dimension));
  }

  std::vector<std::string> missing;
  for (const std::string& term : terms) {
    std::string key = normalize_surface(term);
    if (cache.vectors.find(key) == cache.vectors.end()) missing.push_back(key);
  }
  std::sort(missing.begin(), missing.end());
  missing.erase(std::unique(missing.begin(), missing.end()), missing.end());

  if (!missing.empty()) {
    httplib::Client client(endpoint);
    client.set_read_timeout(30, 0);
    nlohmann::ordered_json request;
    request["terms"] = missing;
    httplib::Result res = client.Post("/embed", request.dump(), "application/json");
    if (!res) {
      fail(ErrorCode::NetworkError,
           "embedding service unreachable at " + endpoint + " (" + to_string(res.error()) + ")");
    }
    if (res->status != 200) {
      fail(ErrorCode::BadResponse, "embedding service returned status " +
                                       std::to_string(res->status));
    }
    nlohmann::ordered_json response;
    try {
      response = nlohmann::ordered_json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::BadResponse, std::string("invalid response JSON (") + e.what() + ")");
    }
    if (!response.is_object() || !response.contains("dimension") ||
        !response.contains("vectors") || !response["vectors"].is_array()) {
      fail(ErrorCode::BadResponse, "response missing \"dimension\" or \"vectors\"");
    }
    if (response["vectors"].size() != missing.size()) {
      fail(ErrorCode::BadResponse,
           "requested " + std::to_string(missing.size()) + " vectors, got " +
               std::to_string(response["vectors"].size()));
    }
    int dim = response["dimension"].get<int>();
    if (expected_dimension > 0 && dim != expected_dimension) {
      fail(ErrorCode::DimensionMismatch, "service dimension " + std::to_string(dim) +
                                             " != expected " +
                                             std::to_string(expected_dimension));
    }
    for (std::size_t i = 0; i < missing.size(); ++i) {
      const auto& row = response["vectors"][i];
      if (!row.is_array() || static_cast<int>(row.size()) != dim) {
        fail(ErrorCode::BadResponse, "vector for \"" + missing[i] + "\" has wrong length");
      }
      std::vector<double> vec;
      vec.reserve(row.size());
      for (const auto& x : row) vec.push_back(x.get<double>());
      cache.add(missing[i], std::move(vec));
    }
    save_vectors(cache, cache_path);
  }

  std::map<std::string, std::vector<double>> result;
  for (const std::string& term : terms) {
    std::string key = normalize_surface(term);
    auto it = cache.vectors.find(key);
    if (it == cache.vectors.end()) {
      fail(ErrorCode::BadResponse, "no vector for term \"" + key + "\" after fetch");
    }
    result[key] = it->second;
  }
  return result;
}

}  // namespace rexkg
