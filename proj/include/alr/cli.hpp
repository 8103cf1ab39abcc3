#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "alr/experiments.hpp"

namespace alr::cli {

inline constexpr std::string_view kToolVersion = "1.0.0";

struct OutputSpec {
  std::string directory = ".";
  std::string prefix;  // defaults to the scenario name
  bool vtk = false;
  std::vector<double> vtk_deltas;  // empty: delta_min only
};

struct RunConfig {
  ScenarioConfig scenario;
  OutputSpec output;
};

// Plain-text document of [section] headers and `key = value` lines; `#`
// starts a comment. Numbers are decimal or scientific, lists are
// comma-separated, points are two numbers. Keys not given fall back to the
// scenario defaults scaled by r1. [geometry] r1 and r2 are required.
//
// `scenario` overrides [medium] scenario when set. Errors are ConfigError
// with a "line N:" prefix for syntax problems and the violated rule for
// invariants.
RunConfig parse_config(std::string_view text, std::optional<ScenarioKind> scenario = std::nullopt);
RunConfig load_config(const std::string& path, std::optional<ScenarioKind> scenario = std::nullopt);

// Applies `section.key=value` overrides to a config document.
std::string apply_overrides(std::string_view text, const std::vector<std::string>& overrides);

// Canonical serialization of every field that influences results.
std::string canonical_text(const ScenarioConfig& sc);
std::uint64_t config_hash(const ScenarioConfig& sc);

struct RunManifest {
  std::string command;
  std::string scenario;
  std::string config_hash;
  std::string mesh_hash;
  std::string version{kToolVersion};
  std::string started;
  std::string finished;
  std::vector<std::string> outputs;

  std::string text() const;
  void write(const std::string& path) const;
};

// Entry point of the alrcloak tool. Exit codes: 0 success, 1 verdict FAIL
// (or failed verification), 2 configuration error, 3 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace alr::cli
