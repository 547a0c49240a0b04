#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "rexkg/errors.hpp"
#include "rexkg/text.hpp"

namespace rexkg {

// One UMLS-like concept: id (CUI), semantic types (TUI), names.
struct LexiconEntry {
  std::string cui;
  std::string canonical_name;
  std::vector<std::string> tuis;
  std::optional<std::string> definition;
  std::vector<std::string> aliases;

  friend bool operator==(const LexiconEntry&, const LexiconEntry&) = default;
};

// Concept store for alias normalization. Immutable after load; lookup is an
// exact match on the normalized surface, no fuzzy fallback.
class Lexicon {
 public:
  Lexicon() = default;

  // Throws DuplicateCui / AliasConflict on inconsistent input.
  void add_entry(LexiconEntry entry) {
    if (entry.cui.empty()) fail(ErrorCode::MalformedLine, "entry with empty cui");
    if (entry.canonical_name.empty()) {
      fail(ErrorCode::MalformedLine, "entry " + entry.cui + " has empty canonical name");
    }
    if (cui_index_.count(entry.cui) != 0) {
      fail(ErrorCode::DuplicateCui, "duplicate cui " + entry.cui);
    }
    std::size_t idx = entries_.size();
    index_surface(entry.canonical_name, entry.cui, idx);
    for (const std::string& alias : entry.aliases) {
      if (alias.empty()) {
        fail(ErrorCode::MalformedLine, "entry " + entry.cui + " has an empty alias");
      }
      index_surface(alias, entry.cui, idx);
    }
    cui_index_.emplace(entry.cui, idx);
    entries_.push_back(std::move(entry));
  }

  const LexiconEntry* lookup(std::string_view surface) const {
    std::string key = normalize_surface(surface);
    if (key.empty()) return nullptr;
    auto it = alias_index_.find(key);
    if (it == alias_index_.end()) return nullptr;
    return &entries_[it->second];
  }

  std::optional<std::string> cui_of(std::string_view surface) const {
    const LexiconEntry* entry = lookup(surface);
    if (entry == nullptr) return std::nullopt;
    return entry->cui;
  }

  const std::vector<LexiconEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  friend bool operator==(const Lexicon& a, const Lexicon& b) {
    return a.entries_ == b.entries_;
  }

 private:
  void index_surface(const std::string& surface, const std::string& cui, std::size_t idx) {
    std::string key = normalize_surface(surface);
    if (key.empty()) {
      fail(ErrorCode::MalformedLine, "entry " + cui + ": surface normalizes to empty");
    }
    auto [it, inserted] = alias_index_.emplace(key, idx);
    if (!inserted && entries_[it->second].cui != cui) {
      fail(ErrorCode::AliasConflict, "alias \"" + key + "\" maps to both " +
                                         entries_[it->second].cui + " and " + cui);
    }
  }

  std::vector<LexiconEntry> entries_;
  std::unordered_map<std::string, std::size_t> alias_index_;  // normalized surface -> entry
  std::unordered_map<std::string, std::size_t> cui_index_;
};

inline Lexicon parse_lexicon_stream(std::istream& in) {
  using njson = nlohmann::ordered_json;
  Lexicon lexicon;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    njson record;
    try {
      record = njson::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::MalformedLine,
           "line " + std::to_string(line_no) + ": invalid JSON (" + e.what() + ")");
    }
    if (!record.is_object() || !record.contains("cui") || !record["cui"].is_string() ||
        !record.contains("name") || !record["name"].is_string()) {
      fail(ErrorCode::MalformedLine,
           "line " + std::to_string(line_no) + ": lexicon entry needs string \"cui\" and \"name\"");
    }
    LexiconEntry entry;
    entry.cui = record["cui"].get<std::string>();
    entry.canonical_name = record["name"].get<std::string>();
    if (record.contains("tuis")) {
      for (const njson& t : record["tuis"]) entry.tuis.push_back(t.get<std::string>());
    }
    if (record.contains("definition") && record["definition"].is_string()) {
      entry.definition = record["definition"].get<std::string>();
    }
    if (record.contains("aliases")) {
      for (const njson& a : record["aliases"]) entry.aliases.push_back(a.get<std::string>());
    }
    lexicon.add_entry(std::move(entry));
  }
  return lexicon;
}

inline Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open lexicon file " + path.string());
  return parse_lexicon_stream(in);
}

inline std::string serialize_lexicon(const Lexicon& lexicon) {
  using njson = nlohmann::ordered_json;
  std::string out;
  for (const LexiconEntry& entry : lexicon.entries()) {
    njson record;
    record["cui"] = entry.cui;
    record["name"] = entry.canonical_name;
    record["tuis"] = entry.tuis;
    if (entry.definition) record["definition"] = *entry.definition;
    record["aliases"] = entry.aliases;
    out += record.dump();
    out.push_back('\n');
  }
  return out;
}

inline void save_lexicon(const Lexicon& lexicon, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write lexicon file " + path.string());
  out << serialize_lexicon(lexicon);
}

}  // namespace rexkg
