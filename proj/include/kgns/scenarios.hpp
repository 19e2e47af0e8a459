#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kgns {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ScenarioReport {
  std::string name;
  std::string tables;  // TSV blocks
  std::vector<CheckResult> checks;

  bool passed() const;
};

/// prop1 .. prop6 and margins.
const std::vector<std::string>& scenario_names();

/// Throws ConfigError for an unknown name.
ScenarioReport run_scenario(std::string_view name, std::uint64_t seed);

/// Tables followed by one "PASS <check>" or "FAIL <check>" line per check.
std::string format_report(const ScenarioReport& report);

}  // namespace kgns
