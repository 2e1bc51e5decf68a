// Copyright 2026 the alignahead authors
// SPDX-License-Identifier: Apache-2.0
//
// Run manifests: every artifact directory gets exactly one manifest.json
// recording the config hash, seed, source revision, timestamps and outputs.
// The hash covers the canonical (sorted-key) config JSON, so it is stable
// across machines for identical configs.

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace align {

/// FNV-1a over the canonical JSON dump.
inline std::string config_hash(const nlohmann::json& config) {
  const std::string canon = config.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string source_revision;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;

  nlohmann::json to_json() const {
    return {{"command", command},
            {"config", config},
            {"config_hash", config_hash(config)},
            {"seed", seed},
            {"source_revision", source_revision},
            {"started_at", started_at},
            {"finished_at", finished_at},
            {"outputs", outputs}};
  }
};

inline void write_manifest(const RunManifest& m,
                           const std::filesystem::path& dir) {
  std::ofstream out(dir / "manifest.json");
  if (!out)
    throw std::runtime_error("write_manifest: cannot open " +
                             (dir / "manifest.json").string());
  out << m.to_json().dump(2) << "\n";
}

}  // namespace align
