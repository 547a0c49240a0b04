#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rexkg/errors.hpp"
#include "rexkg/graph.hpp"
#include "rexkg/text.hpp"

namespace rexkg {

inline constexpr const char* kToolVersion = "0.1.0";

inline std::string file_content_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot hash " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return fnv1a64_hex(buffer.str());
}

// Machine-readable record of a run: inputs, resolved configuration, and
// output content hashes. Contains no timestamps, so identical runs produce
// identical manifests.
class Manifest {
 public:
  explicit Manifest(std::string subcommand) {
    root_["tool"] = "rexkg";
    root_["tool_version"] = kToolVersion;
    root_["format_versions"]["graph"] = kGraphFormatVersion;
    root_["subcommand"] = std::move(subcommand);
    root_["inputs"] = nlohmann::ordered_json::object();
    root_["config"] = nlohmann::ordered_json::object();
    root_["outputs"] = nlohmann::ordered_json::object();
  }

  void add_input(const std::string& name, const std::filesystem::path& path) {
    nlohmann::ordered_json entry;
    entry["path"] = path.string();
    entry["fnv1a64"] = file_content_hash(path);
    root_["inputs"][name] = std::move(entry);
  }

  void set_config(nlohmann::ordered_json config) { root_["config"] = std::move(config); }

  void add_output(const std::string& name, const std::filesystem::path& path) {
    nlohmann::ordered_json entry;
    entry["path"] = path.string();
    entry["fnv1a64"] = file_content_hash(path);
    root_["outputs"][name] = std::move(entry);
  }

  std::string serialize() const { return root_.dump(2) + "\n"; }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write manifest " + path.string());
    out << serialize();
  }

 private:
  nlohmann::ordered_json root_;
};

}  // namespace rexkg
