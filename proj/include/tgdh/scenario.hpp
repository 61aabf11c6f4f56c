#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tgdh/simnet.hpp"

namespace tgdh {

struct ScenarioCommand {
  enum class Kind { init, join, leave, batchjoin, partition, heal, expect_key_agreement, expect_metrics };
  Kind kind = Kind::init;
  std::vector<std::string> names;
  std::vector<std::set<std::string>> cells;
  std::map<std::string, std::uint64_t> expected;  // expect-metrics
  std::size_t line = 0;
};

/// Keys accepted by expect-metrics.
const std::vector<std::string>& metric_keys();
std::uint64_t metric_value(const OpMetrics& m, const std::string& key);

/// Throws scenario_parse_error naming the offending line.
std::vector<ScenarioCommand> parse_scenario(std::string_view text);
std::string format_command(const ScenarioCommand& cmd);

struct CheckResult {
  std::size_t line = 0;
  std::string op;
  std::string check;
  bool pass = false;
  std::string measured;
  std::string expected;
};

struct ScenarioReport {
  std::vector<CheckResult> checks;
  std::vector<OpRecord> ops;
  bool all_pass() const;
  std::size_t failures() const;
  /// One line per check.
  std::string to_text() const;
};

struct ScenarioOptions {
  Profile profile = Profile::test;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> shuffle_seed;
  /// Compare every operation against the cost model.
  bool cost_checks = true;
};

struct ScenarioRun {
  std::unique_ptr<SimNetwork> net;
  ScenarioReport report;
};

/// Script errors (join while partitioned, unknown member, ...) are raised as
/// scenario_parse_error; protocol failures become failed checks.
ScenarioRun run_scenario(const std::vector<ScenarioCommand>& script, const ScenarioOptions& options);

/// Per-operation cost checks; `h` bounds come from the record heights.
std::vector<CheckResult> cost_checks(const OpRecord& rec, std::size_t line);


}  // namespace tgdh
