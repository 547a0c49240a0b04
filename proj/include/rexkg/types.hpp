#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "rexkg/errors.hpp"

namespace rexkg {

// Declaration order is the fixed tie-break order used by majority votes.
enum class EntityType { Anatomy, Disorder, Concept, Device, Procedure, Size };

enum class Presence { Present, Absent, NotApplicable };

// Declaration order is the fixed tie-break order for edge relation majority.
enum class RelationType { SuggestiveOf, LocatedAt, Modify };

inline constexpr std::array<EntityType, 6> kEntityTypes = {
    EntityType::Anatomy,  EntityType::Disorder,  EntityType::Concept,
    EntityType::Device,   EntityType::Procedure, EntityType::Size,
};

inline constexpr std::array<RelationType, 3> kRelationTypes = {
    RelationType::SuggestiveOf,
    RelationType::LocatedAt,
    RelationType::Modify,
};

inline const char* to_string(EntityType t) {
  switch (t) {
    case EntityType::Anatomy: return "anatomy";
    case EntityType::Disorder: return "disorder";
    case EntityType::Concept: return "concept";
    case EntityType::Device: return "device";
    case EntityType::Procedure: return "procedure";
    case EntityType::Size: return "size";
  }
  return "?";
}

inline const char* to_string(RelationType r) {
  switch (r) {
    case RelationType::SuggestiveOf: return "suggestive_of";
    case RelationType::LocatedAt: return "located_at";
    case RelationType::Modify: return "modify";
  }
  return "?";
}

inline const char* to_string(Presence p) {
  switch (p) {
    case Presence::Present: return "present";
    case Presence::Absent: return "absent";
    case Presence::NotApplicable: return "not_applicable";
  }
  return "?";
}

inline std::optional<EntityType> entity_type_from(std::string_view s) {
  for (EntityType t : kEntityTypes) {
    if (s == to_string(t)) return t;
  }
  return std::nullopt;
}

inline std::optional<RelationType> relation_type_from(std::string_view s) {
  for (RelationType r : kRelationTypes) {
    if (s == to_string(r)) return r;
  }
  return std::nullopt;
}

inline std::optional<Presence> presence_from(std::string_view s) {
  if (s == "present") return Presence::Present;
  if (s == "absent") return Presence::Absent;
  if (s == "not_applicable") return Presence::NotApplicable;
  return std::nullopt;
}

// Presence flags are meaningful for disorders and devices only.
inline bool presence_applies(EntityType t) {
  return t == EntityType::Disorder || t == EntityType::Device;
}

}  // namespace rexkg
