#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "newsrank/errors.hpp"

namespace newsrank {

/// Pipeline artifacts are JSONL with an optional leading {"_meta": {...}}
/// line carrying the config fingerprint. Readers skip it; loaders that need
/// it use read_artifact_meta.

inline void write_jsonl_meta(std::ostream& os, const json& meta) {
  json line;
  line["_meta"] = meta;
  os << line.dump() << "\n";
}

inline std::optional<json> read_artifact_meta(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_object() && obj.contains("_meta")) return obj["_meta"];
    return std::nullopt;
  }
  return std::nullopt;
}

/// Strict artifact reader: these files are produced by this tool, so a
/// malformed line is an error, not a reject.
inline void read_artifact_jsonl(const std::string& path,
                                const std::function<void(const json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object())
      throw DataError(path + ":" + std::to_string(lineno) + ": malformed JSON");
    if (obj.contains("_meta")) continue;
    try {
      fn(obj);
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

/// Opens an output file, creating parent directories. Fails loudly instead
/// of writing partial artifacts to bad paths.
inline std::ofstream open_artifact(const std::string& path) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw DataError("cannot write file: " + path);
  return out;
}

}  // namespace newsrank
