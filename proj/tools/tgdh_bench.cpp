#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "tgdh/tgdh.h"

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

struct BenchArgs {
  std::string sizes = "1..70";
  std::size_t iterations = 100;
  std::string mode = "all-sponsors";
  std::string profile = "test";
  std::uint64_t seed = 1;
  std::string out;
};

int report_status(tgdh_status st) {
  std::cerr << "error: " << tgdh_status_name(st) << ": " << tgdh_last_error() << "\n";
  switch (st) {
    case TGDH_E_INVALID_ARGUMENT:
    case TGDH_E_SCENARIO_PARSE:
      return kUsage;
    default:
      return kFail;
  }
}

tgdh_profile profile_of(const std::string& name) {
  return name == "production" ? TGDH_PROFILE_PRODUCTION : TGDH_PROFILE_TEST;
}

int emit(tgdh_bench* bench, const std::string& out) {
  const char* csv = tgdh_bench_csv(bench);
  if (out.empty() || out == "-") {
    std::cout << csv;
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f || !(f << csv)) {
      std::cerr << "error: cannot write " << out << "\n";
      return kFail;
    }
  }
  for (size_t i = 0; i < tgdh_bench_row_count(bench); ++i) {
    tgdh_bench_row row;
    if (tgdh_bench_row_at(bench, i, &row) == TGDH_OK && row.has_reference) {
      std::fprintf(stderr, "m=%zu total_ms=%.1f reference_ms=%.1f (reported, not compared)\n", row.m,
                   row.total_ms, row.reference_ms);
    }
  }
  return kPass;
}

int run_bench(const BenchArgs& args, bool naive) {
  size_t count = 0;
  tgdh_status st = tgdh_parse_sizes(args.sizes.c_str(), nullptr, 0, &count);
  if (st != TGDH_OK) return report_status(st);
  std::vector<size_t> sizes(count);
  st = tgdh_parse_sizes(args.sizes.c_str(), sizes.data(), sizes.size(), &count);
  if (st != TGDH_OK) return report_status(st);

  tgdh_bench* bench = nullptr;
  if (naive) {
    st = tgdh_bench_naive(sizes.data(), sizes.size(), args.iterations, profile_of(args.profile),
                          args.seed, &bench);
  } else {
    const auto mode = args.mode == "normalized" ? TGDH_BENCH_NORMALIZED : TGDH_BENCH_ALL_SPONSORS;
    st = tgdh_bench_init(sizes.data(), sizes.size(), args.iterations, mode,
                         profile_of(args.profile), args.seed, &bench);
  }
  if (st != TGDH_OK) return report_status(st);
  const int rc = emit(bench, args.out);
  tgdh_bench_destroy(bench);
  return rc;
}

int run_validate(const std::string& path, const std::string& profile, std::uint64_t seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << path << "\n";
    return kUsage;
  }
  std::ostringstream text;
  text << in.rdbuf();
  tgdh_report* report = nullptr;
  const tgdh_status st = tgdh_validate_scenario(text.str().c_str(), profile_of(profile), seed, &report);
  if (st != TGDH_OK) return report_status(st);
  std::cout << tgdh_report_text(report);
  const size_t failures = tgdh_report_failure_count(report);
  std::cout << "checks=" << tgdh_report_check_count(report) << " failures=" << failures << "\n";
  tgdh_report_destroy(report);
  return failures == 0 ? kPass : kFail;
}

// Published figures for protocols this tool does not implement.
void print_reference() {
  std::cout << "protocol,join_rounds,leave_rounds,adversary,pfs\n"
               "ITW,m-1,m-1,passive,no\n"
               "BD,2,2,passive,no\n"
               "STR,2,1,active,yes\n"
               "TGDH,2,1,active,yes\n"
               "P-TGDH,2,1,active,yes\n"
               "BF-TGDH,2,1,active,yes\n"
               "DS-TGDH,2,1,active,yes\n"
               "BD-AT-GDH,2,2,active,yes\n"
               "CCEGK,2,1,active,yes\n"
               "QGKA,2,1,active,yes\n"
               "\n"
               "protocol,operation,rounds,messages,unicast,multicast,exponentiations,signatures,"
               "verifications\n"
               "TGDH,join/merge,2,3,0,3,3h/2,2,3\n"
               "TGDH,leave,1,1,0,1,3h/2,1,1\n"
               "TGDH,partition,h,2h,0,2h,3h,h,h\n"
               "STR,join,2,3,0,3,7,2,3\n"
               "STR,leave/partition,1,1,0,1,3n/2+2,1,1\n"
               "STR,merge,2,3,0,3,3m+4,2,3\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TGDH benchmark and cost validation"};
  app.require_subcommand(1);

  auto* bench = app.add_subcommand("bench", "Group initialization benchmarks");
  bench->require_subcommand(1);

  auto add_common = [](CLI::App* cmd, BenchArgs& a) {
    cmd->add_option("--sizes", a.sizes, "Group sizes, e.g. 1..70 or 8..128:8 or 1,2,5")
        ->capture_default_str();
    cmd->add_option("--iterations", a.iterations, "Runs averaged per point")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--profile", a.profile)
        ->check(CLI::IsMember({"test", "production"}))
        ->capture_default_str();
    cmd->add_option("--seed", a.seed)->capture_default_str();
    cmd->add_option("--out", a.out, "CSV output path (stdout if omitted)");
  };

  BenchArgs init_args;
  auto* init = bench->add_subcommand("init", "TGDH sequential joins 1..m");
  add_common(init, init_args);
  init->add_option("--mode", init_args.mode)
      ->check(CLI::IsMember({"all-sponsors", "normalized"}))
      ->capture_default_str();

  BenchArgs naive_args;
  auto* naive = bench->add_subcommand("naive", "Chained group Diffie-Hellman baseline");
  add_common(naive, naive_args);

  std::string scenario_path;
  std::string validate_profile = "test";
  std::uint64_t validate_seed = 1;
  auto* validate = app.add_subcommand("validate", "Run a scenario and check its costs");
  validate->add_option("scenario", scenario_path)->required()->check(CLI::ExistingFile);
  validate->add_option("--profile", validate_profile)
      ->check(CLI::IsMember({"test", "production"}))
      ->capture_default_str();
  validate->add_option("--seed", validate_seed)->capture_default_str();

  auto* reference = app.add_subcommand("reference", "Print published protocol comparison rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kPass : kUsage;
  }

  if (*init) return run_bench(init_args, false);
  if (*naive) return run_bench(naive_args, true);
  if (*validate) return run_validate(scenario_path, validate_profile, validate_seed);
  if (*reference) {
    print_reference();
    return kPass;
  }
  return kUsage;
}
