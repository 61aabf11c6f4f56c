#include "tgdh/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace tgdh {
namespace {

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::scenario_parse_error, "line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string check_name(const std::string& name, std::size_t line) {
  if (name.empty()) parse_error(line, "empty member name");
  if (name.find_first_of(",|=#") != std::string::npos) {
    parse_error(line, "member name '" + name + "' contains a reserved character");
  }
  return name;
}

std::vector<std::string> name_list(const std::string& token, std::size_t line) {
  std::vector<std::string> names;
  std::set<std::string> seen;
  for (auto& n : split(token, ',')) {
    check_name(n, line);
    if (!seen.insert(n).second) parse_error(line, "member " + n + " listed twice");
    names.push_back(n);
  }
  return names;
}

std::string join_names(const std::vector<std::string>& names, char sep) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += sep;
    out += n;
  }
  return out;
}

std::string op_label(const OpRecord& rec) {
  return std::string(to_string(rec.kind)) + " " + join_names(rec.subjects, ',');
}

CheckResult compare(std::size_t line, const std::string& op, const std::string& check,
                    std::uint64_t measured, std::uint64_t expected) {
  return {line, op, check, measured == expected, std::to_string(measured), std::to_string(expected)};
}

CheckResult at_most(std::size_t line, const std::string& op, const std::string& check,
                    std::uint64_t measured, std::uint64_t bound) {
  return {line, op, check, measured <= bound, std::to_string(measured), "<=" + std::to_string(bound)};
}

}  // namespace

const std::vector<std::string>& metric_keys() {
  static const std::vector<std::string> keys{
      "rounds",     "messages",   "unicasts",      "multicasts",     "exponentiations",
      "signatures", "verifications", "sponsor-exponentiations", "tree-broadcasts"};
  return keys;
}

std::uint64_t metric_value(const OpMetrics& m, const std::string& key) {
  if (key == "rounds") return m.rounds;
  if (key == "messages") return m.messages;
  if (key == "unicasts") return m.unicasts;
  if (key == "multicasts") return m.multicasts;
  if (key == "exponentiations") return m.exponentiations;
  if (key == "signatures") return m.signatures;
  if (key == "verifications") return m.verifications;
  if (key == "sponsor-exponentiations") return m.sponsor_exponentiations;
  if (key == "tree-broadcasts") return m.tree_broadcasts;
  throw Error(ErrorCode::invalid_argument, "unknown metric " + key);
}

std::vector<ScenarioCommand> parse_scenario(std::string_view text) {
  std::vector<ScenarioCommand> out;
  std::size_t line_no = 0;
  for (auto& raw : split(text, '\n')) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    std::istringstream in(line);
    std::vector<std::string> words;
    for (std::string w; in >> w;) words.push_back(w);
    if (words.empty()) continue;

    ScenarioCommand cmd;
    cmd.line = line_no;
    const std::string& verb = words[0];
    const std::size_t args = words.size() - 1;
    auto want = [&](std::size_t n) {
      if (args != n) {
        parse_error(line_no, verb + " takes " + std::to_string(n) + " argument(s), got " +
                                 std::to_string(args));
      }
    };
    if (verb == "init" || verb == "join" || verb == "leave") {
      want(1);
      cmd.kind = verb == "init"   ? ScenarioCommand::Kind::init
                 : verb == "join" ? ScenarioCommand::Kind::join
                                  : ScenarioCommand::Kind::leave;
      cmd.names = {check_name(words[1], line_no)};
    } else if (verb == "batchjoin") {
      want(1);
      cmd.kind = ScenarioCommand::Kind::batchjoin;
      cmd.names = name_list(words[1], line_no);
    } else if (verb == "partition") {
      want(1);
      cmd.kind = ScenarioCommand::Kind::partition;
      for (const auto& cell : split(words[1], '|')) {
        auto names = name_list(cell, line_no);
        cmd.cells.emplace_back(names.begin(), names.end());
      }
      if (cmd.cells.size() < 2) parse_error(line_no, "partition needs at least two cells");
    } else if (verb == "heal" || verb == "expect-key-agreement") {
      want(0);
      cmd.kind = verb == "heal" ? ScenarioCommand::Kind::heal
                                : ScenarioCommand::Kind::expect_key_agreement;
    } else if (verb == "expect-metrics") {
      if (args == 0) parse_error(line_no, "expect-metrics needs key=value pairs");
      cmd.kind = ScenarioCommand::Kind::expect_metrics;
      const auto& keys = metric_keys();
      for (std::size_t i = 1; i < words.size(); ++i) {
        const auto eq = words[i].find('=');
        if (eq == std::string::npos) parse_error(line_no, "expected key=value, got " + words[i]);
        const std::string key = words[i].substr(0, eq);
        const std::string value = words[i].substr(eq + 1);
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
          parse_error(line_no, "unknown metric " + key);
        }
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
          parse_error(line_no, "metric " + key + " needs a non-negative integer");
        }
        cmd.expected[key] = v;
      }
    } else {
      parse_error(line_no, "unknown command " + verb);
    }
    out.push_back(std::move(cmd));
  }
  return out;
}

std::string format_command(const ScenarioCommand& cmd) {
  switch (cmd.kind) {
    case ScenarioCommand::Kind::init: return "init " + cmd.names.at(0);
    case ScenarioCommand::Kind::join: return "join " + cmd.names.at(0);
    case ScenarioCommand::Kind::leave: return "leave " + cmd.names.at(0);
    case ScenarioCommand::Kind::batchjoin: return "batchjoin " + join_names(cmd.names, ',');
    case ScenarioCommand::Kind::partition: {
      std::string out = "partition ";
      for (std::size_t i = 0; i < cmd.cells.size(); ++i) {
        if (i) out += '|';
        out += join_names({cmd.cells[i].begin(), cmd.cells[i].end()}, ',');
      }
      return out;
    }
    case ScenarioCommand::Kind::heal: return "heal";
    case ScenarioCommand::Kind::expect_key_agreement: return "expect-key-agreement";
    case ScenarioCommand::Kind::expect_metrics: {
      std::string out = "expect-metrics";
      for (const auto& [k, v] : cmd.expected) out += " " + k + "=" + std::to_string(v);
      return out;
    }
  }
  return {};
}

bool ScenarioReport::all_pass() const { return failures() == 0; }

std::size_t ScenarioReport::failures() const {
  return static_cast<std::size_t>(
      std::count_if(checks.begin(), checks.end(), [](const auto& c) { return !c.pass; }));
}

std::string ScenarioReport::to_text() const {
  std::string out;
  for (const auto& c : checks) {
    out += c.pass ? "PASS" : "FAIL";
    out += " line=" + std::to_string(c.line) + " op=\"" + c.op + "\" check=" + c.check +
           " measured=" + c.measured + " expected=" + c.expected + "\n";
  }
  return out;
}

std::vector<CheckResult> cost_checks(const OpRecord& rec, std::size_t line) {
  std::vector<CheckResult> out;
  const std::string op = op_label(rec);
  const OpMetrics& m = rec.metrics;
  auto exact = [&](std::initializer_list<std::pair<const char*, std::uint64_t>> want) {
    for (const auto& [key, value] : want) {
      out.push_back(compare(line, op, key, metric_value(m, key), value));
    }
  };
  switch (rec.kind) {
    case OpKind::init:
      return out;
    case OpKind::join:
    case OpKind::merge:
      exact({{"rounds", 2}, {"messages", 3}, {"unicasts", 0}, {"multicasts", 3},
             {"signatures", 2}, {"verifications", 3}});
      break;
    case OpKind::batch_join:
      exact({{"rounds", 2}, {"unicasts", 0}, {"tree-broadcasts", 1}});
      break;
    case OpKind::leave:
      exact({{"rounds", 1}, {"messages", 1}, {"unicasts", 0}, {"multicasts", 1},
             {"signatures", 1}, {"verifications", 1}});
      break;
    case OpKind::partition: {
      const std::uint64_t h = rec.height_before;
      out.push_back(at_most(line, op, "rounds", m.rounds, h));
      out.push_back(at_most(line, op, "messages", m.messages, 2 * h));
      out.push_back(compare(line, op, "unicasts", m.unicasts, 0));
      out.push_back(at_most(line, op, "signatures", m.signatures, h));
      out.push_back(at_most(line, op, "verifications", m.verifications, h));
      out.push_back(at_most(line, op, "sponsor-exponentiations", m.sponsor_exponentiations, 3 * h));
      break;
    }
  }
  if (rec.kind != OpKind::partition) {
    const std::uint64_t h = rec.height_after;
    for (const auto& [name, spent] : rec.sponsors) {
      const std::uint64_t hi = std::max<std::uint64_t>(3 * h, 1);
      out.push_back({line, op, "sponsor-exponentiations[" + name + "]",
                     spent >= h && spent <= hi, std::to_string(spent),
                     "[" + std::to_string(h) + "," + std::to_string(hi) + "]"});
      if (auto d = rec.sponsor_depths.find(name); d != rec.sponsor_depths.end()) {
        out.push_back(compare(line, op, "sponsor-recount[" + name + "]", spent,
                              sponsor_cost(d->second)));
      }
    }
  }
  return out;
}

ScenarioRun run_scenario(const std::vector<ScenarioCommand>& script, const ScenarioOptions& options) {
  ScenarioRun run;
  run.net = std::make_unique<SimNetwork>(GroupParams::for_profile(options.profile), options.seed,
                                         options.shuffle_seed);
  SimNetwork& net = *run.net;
  auto& report = run.report;
  std::vector<OpRecord> last;

  for (const auto& cmd : script) {
    std::vector<OpRecord> produced;
    try {
      switch (cmd.kind) {
        case ScenarioCommand::Kind::init: produced = {net.init(cmd.names[0])}; break;
        case ScenarioCommand::Kind::join: produced = {net.join(cmd.names[0])}; break;
        case ScenarioCommand::Kind::leave: produced = {net.leave(cmd.names[0])}; break;
        case ScenarioCommand::Kind::batchjoin: produced = {net.batch_join(cmd.names)}; break;
        case ScenarioCommand::Kind::partition: produced = net.inject_partition(cmd.cells); break;
        case ScenarioCommand::Kind::heal: produced = net.heal_partition(); break;
        case ScenarioCommand::Kind::expect_key_agreement: {
          for (const auto& cell : net.cells()) {
            std::set<Bytes> keys;
            std::size_t missing = 0;
            for (const auto& name : cell) {
              const auto& key = net.member(name).group_key();
              if (!key) {
                ++missing;
                continue;
              }
              Bytes k(key->bytes.begin(), key->bytes.end());
              ByteWriter w;
              w.u64(key->epoch);
              k.insert(k.end(), w.bytes().begin(), w.bytes().end());
              keys.insert(std::move(k));
            }
            const std::string first = *cell.begin();
            report.checks.push_back({cmd.line, "cell of " + first, "key-agreement",
                                     missing == 0 && keys.size() == 1,
                                     "keys:" + std::to_string(keys.size()) +
                                         ",missing:" + std::to_string(missing),
                                     "keys:1,missing:0"});
          }
          break;
        }
        case ScenarioCommand::Kind::expect_metrics: {
          if (last.empty()) parse_error(cmd.line, "expect-metrics before any operation");
          for (const auto& rec : last) {
            for (const auto& [key, value] : cmd.expected) {
              report.checks.push_back(
                  compare(cmd.line, op_label(rec), key, metric_value(rec.metrics, key), value));
            }
          }
          break;
        }
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::scenario_parse_error) throw;
      if (e.code() == ErrorCode::non_quiescence) {
        report.checks.push_back({cmd.line, format_command(cmd), "quiescence", false, e.what(),
                                 "quiescent"});
        return run;
      }
      parse_error(cmd.line, std::string(to_string(e.code())) + ": " + e.what());
    }
    if (produced.empty()) continue;
    for (const auto& rec : produced) {
      if (rec.kind != OpKind::init) {
        report.checks.push_back({cmd.line, op_label(rec), "protocol-errors", rec.errors.empty(),
                                 rec.errors.empty() ? "0" : rec.errors.front(), "0"});
      }
      if (options.cost_checks) {
        auto checks = cost_checks(rec, cmd.line);
        report.checks.insert(report.checks.end(), checks.begin(), checks.end());
      }
      report.ops.push_back(rec);
    }
    last = std::move(produced);
  }
  return run;
}

}  // namespace tgdh
