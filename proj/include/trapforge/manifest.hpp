#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trapforge/digest.hpp"
#include "trapforge/errors.hpp"
#include "trapforge/version.hpp"

namespace trapforge {

// Every command that writes an output file also writes a small JSON manifest
// next to it, recording what was produced, from what inputs, and with which
// parameters, so a dataset can be traced back to the exact invocation.
struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<std::filesystem::path> inputs;
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<std::filesystem::path> outputs;
  std::uint64_t duration_ms = 0;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["tool"] = "trapforge";
    j["version"] = kVersion;
    j["command"] = command;
    if (seed_set) j["seed"] = seed;
    auto file_entry = [](const std::filesystem::path& p, bool basename_only) {
      nlohmann::json o;
      o["path"] = basename_only ? p.filename().string() : p.string();
      o["bytes"] = static_cast<std::uint64_t>(std::filesystem::file_size(p));
      o["sha256"] = sha256_file_hex(p);
      return o;
    };
    auto ins = nlohmann::json::array();
    for (const auto& p : inputs) ins.push_back(file_entry(p, false));
    j["inputs"] = std::move(ins);
    j["parameters"] = parameters;
    auto outs = nlohmann::json::array();
    for (const auto& p : outputs) outs.push_back(file_entry(p, true));
    j["outputs"] = std::move(outs);
    j["duration_ms"] = duration_ms;
    return j;
  }
};

// The manifest sits beside the first output: <output>.manifest.json
inline std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  std::filesystem::path p = output;
  p += ".manifest.json";
  return p;
}

inline void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << m.to_json().dump(2) << '\n';
  if (!out) throw IoError("short write to " + path.string());
}

inline void write_manifest(const RunManifest& m) {
  if (m.outputs.empty()) throw IoError("manifest has no outputs");
  write_manifest(m, manifest_path_for(m.outputs.front()));
}

}  // namespace trapforge
