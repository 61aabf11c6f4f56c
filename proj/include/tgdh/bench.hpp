#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tgdh/group_math.hpp"

namespace tgdh {

enum class BenchMode { all_sponsors, normalized };

struct BenchConfig {
  std::vector<std::size_t> sizes;
  std::size_t iterations = 100;
  BenchMode mode = BenchMode::all_sponsors;
  Profile profile = Profile::test;
  std::uint64_t seed = 1;
};

struct BenchRow {
  std::size_t m = 0;
  double total_ms = 0;
  double normalized_ms = 0;
  std::uint64_t exps_measured = 0;
  std::uint64_t exps_predicted = 0;
  std::uint64_t rounds = 0;
  std::uint64_t messages = 0;
  /// Published figure for the same point, where one exists.
  std::optional<double> reference_ms;
};

/// Wall time of growing 0 -> 70 members reported alongside the 70-member row.
inline constexpr double kReferenceInitMs = 8160.0;

/// Grows one group by sequential joins per iteration; row m is cumulative
/// over the first m-1 joins. Throws invalid_state if count columns differ
/// between iterations or measured counts disagree with the tree-shape recount.
std::vector<BenchRow> bench_init(const BenchConfig& config);

/// Chained group Diffie-Hellman: every join recomputes the chain over all n
/// members, one blinding then n-1 sequential exponentiations.
std::vector<BenchRow> bench_naive_gdh(const BenchConfig& config);

/// Sponsor exponentiations for each sequential join 2..max_m, from tree shape.
std::vector<std::uint64_t> tgdh_join_sponsor_costs(std::size_t max_m);
/// Exponentiation steps the naive chain spends when the n-th member joins.
inline std::uint64_t naive_join_dh_steps(std::size_t n) { return n == 0 ? 0 : n - 1; }

/// "1..70", "2..128:2", "1,2,5", or a mix separated by commas.
std::vector<std::size_t> parse_sizes(std::string_view spec);

std::string bench_csv(const std::vector<BenchRow>& rows);

/// Least-squares slope of log(y) against log(x); skips non-positive points.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace tgdh
