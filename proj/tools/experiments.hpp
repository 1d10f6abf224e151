#pragma once

#include "artifacts.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lab {

struct Assertion {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunContext {
  nlohmann::json spec;  // experiment parameters; missing keys take defaults
  std::uint64_t seed = 1;
  ArtifactWriter* out = nullptr;
};

struct Outcome {
  std::string anchor;         // the identity under test, in words
  nlohmann::json parameters;  // effective parameters after defaults
  nlohmann::json results;
  std::vector<Assertion> assertions;

  bool passed() const;
  void check(std::string name, bool ok, std::string detail = {});
};

using Runner = Outcome (*)(const RunContext&);

// Keyed by subcommand name.
const std::map<std::string, Runner>& experiments();

// Assembles report.json: deterministic, no timings.
nlohmann::json report_json(const std::string& experiment, std::uint64_t seed, const Outcome& o);

}  // namespace lab
