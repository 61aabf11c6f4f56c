#include "tgdh/bench.hpp"

#include <algorithm>
#include <chrono>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <tuple>

#include "tgdh/error.hpp"
#include "tgdh/keytree.hpp"
#include "tgdh/simnet.hpp"

namespace tgdh {
namespace {

using Clock = std::chrono::steady_clock;

std::string member_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "m%03zu", i);
  return buf;
}

std::vector<std::size_t> checked_sizes(const BenchConfig& config) {
  if (config.sizes.empty()) throw Error(ErrorCode::invalid_argument, "no group sizes");
  if (config.iterations == 0) throw Error(ErrorCode::invalid_argument, "iterations must be >= 1");
  std::vector<std::size_t> sizes = config.sizes;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  if (sizes.front() == 0) throw Error(ErrorCode::invalid_argument, "group sizes must be >= 1");
  return sizes;
}

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

using Counts = std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>;

void fold_iteration(std::vector<BenchRow>& rows, std::vector<Counts>& reference,
                    const std::vector<Counts>& counts, const std::vector<double>& times,
                    bool first) {
  if (first) {
    reference = counts;
  } else if (counts != reference) {
    throw Error(ErrorCode::invalid_state, "count columns differ between iterations");
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].total_ms += times[i];
    std::tie(rows[i].exps_measured, rows[i].rounds, rows[i].messages) = counts[i];
  }
}

void finish_rows(std::vector<BenchRow>& rows, std::size_t iterations) {
  for (auto& row : rows) {
    row.total_ms /= static_cast<double>(iterations);
    row.normalized_ms = row.total_ms / static_cast<double>(row.m);
    if (row.m == 70) row.reference_ms = kReferenceInitMs;
  }
}

}  // namespace

std::vector<std::uint64_t> tgdh_join_sponsor_costs(std::size_t max_m) {
  std::vector<std::uint64_t> out;
  if (max_m < 2) return out;
  KeyTree shape = KeyTree::singleton(member_name(0), GroupElement(1));
  for (std::size_t m = 2; m <= max_m; ++m) {
    auto change = apply_join(shape, member_name(m - 1), GroupElement(1));
    shape = std::move(change.tree);
    out.push_back(sponsor_cost(shape.find_leaf(change.sponsor)->level));
  }
  return out;
}

std::vector<BenchRow> bench_init(const BenchConfig& config) {
  const auto sizes = checked_sizes(config);
  const std::size_t max_m = sizes.back();
  const GroupParams& params = GroupParams::for_profile(config.profile);

  // Joiner's blinding plus the sponsor's path recomputation, per join.
  const auto sponsor_costs = tgdh_join_sponsor_costs(max_m);
  std::vector<BenchRow> rows;
  for (auto m : sizes) {
    BenchRow row;
    row.m = m;
    for (std::size_t j = 0; j + 1 < m; ++j) row.exps_predicted += sponsor_costs[j] + 1;
    rows.push_back(row);
  }

  std::vector<Counts> reference;
  for (std::size_t it = 0; it < config.iterations; ++it) {
    std::vector<Counts> counts;
    std::vector<double> times;
    SimNetwork net(params, config.seed * 1000003u + it);
    std::uint64_t exps = 0, rounds = 0, messages = 0;
    std::size_t next = 0;
    const auto start = Clock::now();
    net.init(member_name(0));
    for (std::size_t m = 1; m <= max_m; ++m) {
      if (m > 1) {
        const OpRecord rec = net.join(member_name(m - 1));
        if (!rec.errors.empty()) throw Error(ErrorCode::invalid_state, rec.errors.front());
        exps += rec.joiner_exponentiations + rec.metrics.sponsor_exponentiations;
        rounds += rec.metrics.rounds;
        messages += rec.metrics.messages;
        if (config.mode == BenchMode::all_sponsors) {
          for (const auto& name : net.member_names()) {
            Member& member = net.member(name);
            const auto depth = member.tree()->find_leaf(name)->level;
            if (member.recompute_full_path() != sponsor_cost(depth)) {
              throw Error(ErrorCode::invalid_state, name + " path recount mismatch");
            }
          }
        } else {
          const auto& key = net.member(member_name(0)).group_key();
          for (const auto& name : net.member_names()) {
            if (!key || net.member(name).group_key() != key) {
              throw Error(ErrorCode::invalid_state, "members disagree on the group key");
            }
          }
        }
      }
      if (next < sizes.size() && sizes[next] == m) {
        times.push_back(elapsed_ms(start));
        counts.emplace_back(exps, rounds, messages);
        ++next;
      }
    }
    fold_iteration(rows, reference, counts, times, it == 0);
  }
  finish_rows(rows, config.iterations);
  for (const auto& row : rows) {
    if (row.exps_measured != row.exps_predicted) {
      throw Error(ErrorCode::invalid_state,
                  "measured exponentiations differ from prediction at m=" + std::to_string(row.m));
    }
  }
  return rows;
}

std::vector<BenchRow> bench_naive_gdh(const BenchConfig& config) {
  const auto sizes = checked_sizes(config);
  const std::size_t max_m = sizes.back();
  const GroupParams& params = GroupParams::for_profile(config.profile);

  std::vector<BenchRow> rows;
  for (auto m : sizes) {
    BenchRow row;
    row.m = m;
    for (std::size_t n = 2; n <= m; ++n) row.exps_predicted += 1 + naive_join_dh_steps(n);
    rows.push_back(row);
  }

  std::vector<Counts> reference;
  for (std::size_t it = 0; it < config.iterations; ++it) {
    Rng rng(config.seed * 1000003u + it);
    std::vector<Counts> counts;
    std::vector<double> times;
    std::vector<Exponent> shares;
    ExpCounter counter;
    std::uint64_t rounds = 0, messages = 0;
    std::size_t next = 0;
    const auto start = Clock::now();
    for (std::size_t m = 1; m <= max_m; ++m) {
      shares.push_back(random_exponent(params, rng));
      if (m > 1) {
        // The chain restarts from the first member and passes through all others.
        GroupElement acc = blind(params, shares.front(), counter);
        for (std::size_t i = 1; i < shares.size(); ++i) acc = dh(params, shares[i], acc, counter);
        rounds += m - 1;
        messages += m - 1;
      }
      if (next < sizes.size() && sizes[next] == m) {
        times.push_back(elapsed_ms(start));
        counts.emplace_back(counter.count, rounds, messages);
        ++next;
      }
    }
    fold_iteration(rows, reference, counts, times, it == 0);
  }
  finish_rows(rows, config.iterations);
  for (auto& row : rows) row.reference_ms.reset();
  for (const auto& row : rows) {
    if (row.exps_measured != row.exps_predicted) {
      throw Error(ErrorCode::invalid_state, "naive chain count mismatch at m=" + std::to_string(row.m));
    }
  }
  return rows;
}

std::vector<std::size_t> parse_sizes(std::string_view spec) {
  auto number = [&](std::string_view text) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
      throw Error(ErrorCode::invalid_argument, "bad size '" + std::string(text) + "'");
    }
    return v;
  };
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= spec.size()) {
    auto comma = spec.find(',', start);
    if (comma == std::string_view::npos) comma = spec.size();
    std::string_view item = spec.substr(start, comma - start);
    if (auto dots = item.find(".."); dots != std::string_view::npos) {
      std::string_view hi = item.substr(dots + 2);
      std::size_t step = 1;
      if (auto colon = hi.find(':'); colon != std::string_view::npos) {
        step = number(hi.substr(colon + 1));
        hi = hi.substr(0, colon);
      }
      const std::size_t lo_v = number(item.substr(0, dots));
      const std::size_t hi_v = number(hi);
      if (step == 0 || lo_v > hi_v) throw Error(ErrorCode::invalid_argument, "bad range");
      for (std::size_t v = lo_v; v <= hi_v; v += step) out.push_back(v);
    } else {
      out.push_back(number(item));
    }
    start = comma + 1;
  }
  for (auto v : out) {
    if (v == 0) throw Error(ErrorCode::invalid_argument, "group sizes must be >= 1");
  }
  return out;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out =
      "m,total_ms,normalized_ms,exps_measured,exps_predicted,rounds,messages,reference_ms\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.3f,%.6f,%llu,%llu,%llu,%llu,", r.m, r.total_ms,
                  r.normalized_ms, static_cast<unsigned long long>(r.exps_measured),
                  static_cast<unsigned long long>(r.exps_predicted),
                  static_cast<unsigned long long>(r.rounds),
                  static_cast<unsigned long long>(r.messages));
    out += buf;
    if (r.reference_ms) {
      std::snprintf(buf, sizeof buf, "%.3f", *r.reference_ms);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (x[i] <= 0 || y[i] <= 0) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  const double denom = static_cast<double>(n) * sxx - sx * sx;
  if (n < 2 || denom == 0) throw Error(ErrorCode::invalid_argument, "need two distinct points");
  return (static_cast<double>(n) * sxy - sx * sy) / denom;
}

}  // namespace tgdh
