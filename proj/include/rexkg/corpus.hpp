#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "rexkg/errors.hpp"
#include "rexkg/text.hpp"
#include "rexkg/types.hpp"

namespace rexkg {

using njson = nlohmann::ordered_json;

struct EntityMention {
  std::string mention_id;
  std::string text;
  EntityType entity_type = EntityType::Anatomy;
  Presence presence = Presence::NotApplicable;
  int sentence_index = 0;
  int char_start = 0;  // byte offsets into the sentence, end exclusive
  int char_end = 0;

  friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

struct RelationMention {
  std::string source_id;
  std::string target_id;
  RelationType relation_type = RelationType::Modify;

  friend bool operator==(const RelationMention&, const RelationMention&) = default;
};

struct AnnotatedReport {
  std::string report_id;
  std::vector<std::string> sentences;
  std::vector<EntityMention> entities;
  std::vector<RelationMention> relations;

  friend bool operator==(const AnnotatedReport&, const AnnotatedReport&) = default;
};

struct AnnotatedCorpus {
  std::vector<AnnotatedReport> reports;
  std::string source_label;

  friend bool operator==(const AnnotatedCorpus&, const AnnotatedCorpus&) = default;
};

// A broken invariant found by validate_corpus. Violations are data, not errors.
struct Violation {
  std::string report_id;
  std::string field;
  std::string rule;
  std::string detail;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct CorpusStats {
  std::int64_t report_count = 0;
  std::map<EntityType, std::int64_t> mentions_by_type;
  std::map<RelationType, std::int64_t> relations_by_type;
  std::map<std::string, std::int64_t> surface_counts;  // normalized surface

  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

namespace detail {

[[noreturn]] inline void malformed(std::size_t line_no, const std::string& cause) {
  fail(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": " + cause);
}

inline const njson* find_key(const njson& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

inline std::string require_string(const njson& obj, const char* key, std::size_t line_no) {
  const njson* v = find_key(obj, key);
  if (v == nullptr || !v->is_string()) {
    malformed(line_no, std::string("missing or non-string \"") + key + "\"");
  }
  return v->get<std::string>();
}

inline int require_int(const njson& obj, const char* key, std::size_t line_no) {
  const njson* v = find_key(obj, key);
  if (v == nullptr || !v->is_number_integer()) {
    malformed(line_no, std::string("missing or non-integer \"") + key + "\"");
  }
  return v->get<int>();
}

inline AnnotatedReport parse_report_line(const std::string& line, std::size_t line_no,
                                         std::vector<std::string>* warnings) {
  njson record;
  try {
    record = njson::parse(line);
  } catch (const nlohmann::json::exception& e) {
    malformed(line_no, std::string("invalid JSON (") + e.what() + ")");
  }
  if (!record.is_object()) malformed(line_no, "record is not a JSON object");

  AnnotatedReport report;
  report.report_id = require_string(record, "id", line_no);
  if (report.report_id.empty()) malformed(line_no, "empty report id");

  const njson* sentences = find_key(record, "sentences");
  if (sentences == nullptr || !sentences->is_array()) {
    malformed(line_no, "missing or non-array \"sentences\"");
  }
  for (const njson& s : *sentences) {
    if (!s.is_string()) malformed(line_no, "non-string sentence");
    report.sentences.push_back(s.get<std::string>());
  }

  std::unordered_set<std::string> seen_ids;
  if (const njson* entities = find_key(record, "entities")) {
    if (!entities->is_array()) malformed(line_no, "\"entities\" is not an array");
    for (const njson& e : *entities) {
      if (!e.is_object()) malformed(line_no, "entity is not an object");
      EntityMention m;
      m.mention_id = require_string(e, "id", line_no);
      m.text = require_string(e, "text", line_no);
      std::string type_str = require_string(e, "type", line_no);
      auto type = entity_type_from(type_str);
      if (!type) {
        fail(ErrorCode::UnknownEntityType,
             "line " + std::to_string(line_no) + ": unknown entity type \"" + type_str + "\"");
      }
      m.entity_type = *type;
      m.sentence_index = require_int(e, "sent", line_no);
      m.char_start = require_int(e, "start", line_no);
      m.char_end = require_int(e, "end", line_no);

      const njson* presence = find_key(e, "presence");
      if (presence_applies(m.entity_type)) {
        if (presence == nullptr || !presence->is_string()) {
          malformed(line_no, "entity \"" + m.mention_id + "\": " + type_str +
                                 " requires a presence flag");
        }
        auto p = presence_from(presence->get<std::string>());
        if (!p || *p == Presence::NotApplicable) {
          malformed(line_no, "entity \"" + m.mention_id + "\": bad presence \"" +
                                 presence->get<std::string>() + "\"");
        }
        m.presence = *p;
      } else {
        m.presence = Presence::NotApplicable;
        if (presence != nullptr && warnings != nullptr) {
          warnings->push_back("line " + std::to_string(line_no) + ": presence flag on " +
                              type_str + " entity \"" + m.mention_id +
                              "\" ignored (forced to not_applicable)");
        }
      }

      if (!seen_ids.insert(m.mention_id).second) {
        malformed(line_no, "duplicate mention id \"" + m.mention_id + "\"");
      }
      if (m.sentence_index < 0 ||
          m.sentence_index >= static_cast<int>(report.sentences.size())) {
        malformed(line_no, "entity \"" + m.mention_id + "\": sentence index out of range");
      }
      const std::string& sentence = report.sentences[static_cast<std::size_t>(m.sentence_index)];
      if (m.char_start < 0 || m.char_start >= m.char_end ||
          m.char_end > static_cast<int>(sentence.size())) {
        malformed(line_no, "entity \"" + m.mention_id + "\": bad span [" +
                               std::to_string(m.char_start) + "," + std::to_string(m.char_end) +
                               ")");
      }
      if (sentence.compare(static_cast<std::size_t>(m.char_start),
                           static_cast<std::size_t>(m.char_end - m.char_start), m.text) != 0) {
        malformed(line_no, "entity \"" + m.mention_id + "\": span does not match text");
      }
      report.entities.push_back(std::move(m));
    }
  }

  if (const njson* relations = find_key(record, "relations")) {
    if (!relations->is_array()) malformed(line_no, "\"relations\" is not an array");
    for (const njson& r : *relations) {
      if (!r.is_object()) malformed(line_no, "relation is not an object");
      RelationMention rel;
      rel.source_id = require_string(r, "src", line_no);
      rel.target_id = require_string(r, "dst", line_no);
      std::string rel_str = require_string(r, "type", line_no);
      auto rel_type = relation_type_from(rel_str);
      if (!rel_type) malformed(line_no, "unknown relation type \"" + rel_str + "\"");
      rel.relation_type = *rel_type;
      if (rel.source_id == rel.target_id) {
        malformed(line_no, "relation source equals target (\"" + rel.source_id + "\")");
      }
      for (const std::string& id : {rel.source_id, rel.target_id}) {
        if (seen_ids.find(id) == seen_ids.end()) {
          fail(ErrorCode::DanglingRelationRef, "line " + std::to_string(line_no) +
                                                   ": relation references unknown mention \"" +
                                                   id + "\"");
        }
      }
      report.relations.push_back(std::move(rel));
    }
  }
  return report;
}

}  // namespace detail

// Streaming line-by-line parse of the report JSONL format. A single bad line
// aborts with line context rather than silently skipping.
inline AnnotatedCorpus parse_corpus_stream(std::istream& in, std::string source_label,
                                           std::vector<std::string>* warnings = nullptr) {
  AnnotatedCorpus corpus;
  corpus.source_label = std::move(source_label);
  std::unordered_set<std::string> report_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    AnnotatedReport report = detail::parse_report_line(line, line_no, warnings);
    if (!report_ids.insert(report.report_id).second) {
      fail(ErrorCode::DuplicateReportId, "line " + std::to_string(line_no) +
                                             ": duplicate report id \"" + report.report_id +
                                             "\"");
    }
    corpus.reports.push_back(std::move(report));
  }
  return corpus;
}

inline AnnotatedCorpus parse_corpus(const std::filesystem::path& path,
                                    std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open corpus file " + path.string());
  return parse_corpus_stream(in, path.stem().string(), warnings);
}

inline njson report_to_json(const AnnotatedReport& report) {
  njson record;
  record["id"] = report.report_id;
  record["sentences"] = report.sentences;
  njson entities = njson::array();
  for (const EntityMention& m : report.entities) {
    njson e;
    e["id"] = m.mention_id;
    e["text"] = m.text;
    e["type"] = to_string(m.entity_type);
    if (m.presence != Presence::NotApplicable) e["presence"] = to_string(m.presence);
    e["sent"] = m.sentence_index;
    e["start"] = m.char_start;
    e["end"] = m.char_end;
    entities.push_back(std::move(e));
  }
  record["entities"] = std::move(entities);
  njson relations = njson::array();
  for (const RelationMention& r : report.relations) {
    njson rel;
    rel["src"] = r.source_id;
    rel["dst"] = r.target_id;
    rel["type"] = to_string(r.relation_type);
    relations.push_back(std::move(rel));
  }
  record["relations"] = std::move(relations);
  return record;
}

// Canonical JSONL form: fixed key order, compact separators, LF line endings.
// parse_corpus_stream(serialize_corpus(c)) reproduces c exactly.
inline std::string serialize_corpus(const AnnotatedCorpus& corpus) {
  std::string out;
  for (const AnnotatedReport& report : corpus.reports) {
    out += report_to_json(report).dump();
    out.push_back('\n');
  }
  return out;
}

inline void save_corpus(const AnnotatedCorpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write corpus file " + path.string());
  out << serialize_corpus(corpus);
}

inline std::vector<Violation> validate_corpus(const AnnotatedCorpus& corpus) {
  std::vector<Violation> violations;
  std::unordered_set<std::string> report_ids;
  for (const AnnotatedReport& report : corpus.reports) {
    if (!report_ids.insert(report.report_id).second) {
      violations.push_back({report.report_id, "report_id", "DuplicateReportId", ""});
    }
    std::unordered_set<std::string> mention_ids;
    for (const EntityMention& m : report.entities) {
      if (!mention_ids.insert(m.mention_id).second) {
        violations.push_back({report.report_id, "entities", "DuplicateMentionId", m.mention_id});
      }
      if (m.sentence_index < 0 ||
          m.sentence_index >= static_cast<int>(report.sentences.size())) {
        violations.push_back({report.report_id, "entities", "SentenceIndex", m.mention_id});
        continue;
      }
      if (m.char_start >= m.char_end) {
        violations.push_back({report.report_id, "entities", "SpanOrder", m.mention_id});
      } else {
        const std::string& sentence =
            report.sentences[static_cast<std::size_t>(m.sentence_index)];
        if (m.char_start < 0 || m.char_end > static_cast<int>(sentence.size())) {
          violations.push_back({report.report_id, "entities", "SpanBounds", m.mention_id});
        } else if (sentence.compare(static_cast<std::size_t>(m.char_start),
                                    static_cast<std::size_t>(m.char_end - m.char_start),
                                    m.text) != 0) {
          violations.push_back({report.report_id, "entities", "SpanMismatch", m.mention_id});
        }
      }
      bool flagged = m.presence != Presence::NotApplicable;
      if (flagged != presence_applies(m.entity_type)) {
        violations.push_back({report.report_id, "entities", "PresenceRule", m.mention_id});
      }
    }
    for (const RelationMention& r : report.relations) {
      if (r.source_id == r.target_id) {
        violations.push_back({report.report_id, "relations", "SelfRelation", r.source_id});
        continue;
      }
      for (const std::string& id : {r.source_id, r.target_id}) {
        if (mention_ids.find(id) == mention_ids.end()) {
          violations.push_back({report.report_id, "relations", "DanglingRelationRef", id});
        }
      }
    }
  }
  return violations;
}

inline CorpusStats corpus_stats(const AnnotatedCorpus& corpus) {
  CorpusStats stats;
  stats.report_count = static_cast<std::int64_t>(corpus.reports.size());
  for (EntityType t : kEntityTypes) stats.mentions_by_type[t] = 0;
  for (RelationType r : kRelationTypes) stats.relations_by_type[r] = 0;
  for (const AnnotatedReport& report : corpus.reports) {
    for (const EntityMention& m : report.entities) {
      ++stats.mentions_by_type[m.entity_type];
      ++stats.surface_counts[normalize_surface(m.text)];
    }
    for (const RelationMention& r : report.relations) {
      ++stats.relations_by_type[r.relation_type];
    }
  }
  return stats;
}

}  // namespace rexkg
