#include "tgdh/tgdh.h"

#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "tgdh/bench.hpp"
#include "tgdh/scenario.hpp"
#include "tgdh/simnet.hpp"

struct tgdh_net {
  std::unique_ptr<tgdh::SimNetwork> net;
};

struct tgdh_report {
  tgdh::ScenarioReport report;
  std::string text;
};

struct tgdh_bench {
  std::vector<tgdh::BenchRow> rows;
  std::string csv;
};

namespace {

thread_local std::string g_last_error;

tgdh_status to_status(tgdh::ErrorCode code) {
  using tgdh::ErrorCode;
  switch (code) {
    case ErrorCode::invalid_argument: return TGDH_E_INVALID_ARGUMENT;
    case ErrorCode::duplicate_member: return TGDH_E_DUPLICATE_MEMBER;
    case ErrorCode::unknown_member: return TGDH_E_UNKNOWN_MEMBER;
    case ErrorCode::last_member: return TGDH_E_LAST_MEMBER;
    case ErrorCode::empty_survivor_set: return TGDH_E_EMPTY_SURVIVOR_SET;
    case ErrorCode::overlapping_membership: return TGDH_E_OVERLAPPING_MEMBERSHIP;
    case ErrorCode::missing_sibling_blinded_key: return TGDH_E_MISSING_SIBLING_BLINDED_KEY;
    case ErrorCode::malformed_encoding: return TGDH_E_MALFORMED_ENCODING;
    case ErrorCode::tree_too_deep: return TGDH_E_TREE_TOO_DEEP;
    case ErrorCode::bad_signature: return TGDH_E_BAD_SIGNATURE;
    case ErrorCode::stale_epoch: return TGDH_E_STALE_EPOCH;
    case ErrorCode::not_a_member: return TGDH_E_NOT_A_MEMBER;
    case ErrorCode::protocol_overload: return TGDH_E_PROTOCOL_OVERLOAD;
    case ErrorCode::invalid_state: return TGDH_E_INVALID_STATE;
    case ErrorCode::non_quiescence: return TGDH_E_NON_QUIESCENCE;
    case ErrorCode::invalid_cell_cover: return TGDH_E_INVALID_CELL_COVER;
    case ErrorCode::scenario_parse_error: return TGDH_E_SCENARIO_PARSE;
  }
  return TGDH_E_INTERNAL;
}

tgdh_status fail(tgdh_status status, const std::string& what) {
  g_last_error = what;
  return status;
}

template <typename F>
tgdh_status guard(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const tgdh::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(TGDH_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TGDH_E_INTERNAL, e.what());
  }
}

#define TGDH_REQUIRE(cond)                                                 \
  do {                                                                     \
    if (!(cond)) return fail(TGDH_E_INVALID_ARGUMENT, "null argument: " #cond); \
  } while (0)

const tgdh::GroupParams& params_for(tgdh_profile profile) {
  if (profile != TGDH_PROFILE_TEST && profile != TGDH_PROFILE_PRODUCTION) {
    throw tgdh::Error(tgdh::ErrorCode::invalid_argument, "unknown profile");
  }
  return tgdh::GroupParams::for_profile(profile == TGDH_PROFILE_TEST ? tgdh::Profile::test
                                                                     : tgdh::Profile::production);
}

void copy_metrics(const tgdh::OpMetrics& m, tgdh_metrics* out) {
  if (!out) return;
  out->rounds = m.rounds;
  out->messages = m.messages;
  out->unicasts = m.unicasts;
  out->multicasts = m.multicasts;
  out->exponentiations = m.exponentiations;
  out->signatures = m.signatures;
  out->verifications = m.verifications;
  out->sponsor_exponentiations = m.sponsor_exponentiations;
  out->tree_broadcasts = m.tree_broadcasts;
}

tgdh_status copy_records(const std::vector<tgdh::OpRecord>& recs, tgdh_metrics* out,
                         size_t capacity, size_t* count) {
  if (count) *count = recs.size();
  for (size_t i = 0; i < recs.size() && out && i < capacity; ++i) copy_metrics(recs[i].metrics, &out[i]);
  if (out && capacity < recs.size()) return fail(TGDH_E_BUFFER_TOO_SMALL, "metrics buffer too small");
  return TGDH_OK;
}

std::vector<size_t> size_list(const size_t* sizes, size_t count) {
  if (!sizes || count == 0) throw tgdh::Error(tgdh::ErrorCode::invalid_argument, "no sizes");
  return {sizes, sizes + count};
}

}  // namespace

extern "C" {

const char* tgdh_last_error(void) { return g_last_error.c_str(); }

const char* tgdh_status_name(tgdh_status status) {
  switch (status) {
    case TGDH_OK: return "Ok";
    case TGDH_E_BUFFER_TOO_SMALL: return "BufferTooSmall";
    case TGDH_E_INTERNAL: return "Internal";
    default: break;
  }
  if (status > TGDH_OK && status < TGDH_E_BUFFER_TOO_SMALL) {
    return tgdh::to_string(static_cast<tgdh::ErrorCode>(status - 1)).data();
  }
  return "Unknown";
}

tgdh_status tgdh_net_create(tgdh_profile profile, uint64_t seed, tgdh_net** out) {
  TGDH_REQUIRE(out);
  return guard([&] {
    auto handle = std::make_unique<tgdh_net>();
    handle->net = std::make_unique<tgdh::SimNetwork>(params_for(profile), seed);
    *out = handle.release();
    return TGDH_OK;
  });
}

void tgdh_net_destroy(tgdh_net* net) { delete net; }

tgdh_status tgdh_net_init(tgdh_net* net, const char* founder) {
  TGDH_REQUIRE(net && founder);
  return guard([&] {
    net->net->init(founder);
    return TGDH_OK;
  });
}

tgdh_status tgdh_net_join(tgdh_net* net, const char* name, tgdh_metrics* metrics) {
  TGDH_REQUIRE(net && name);
  return guard([&] {
    copy_metrics(net->net->join(name).metrics, metrics);
    return TGDH_OK;
  });
}

tgdh_status tgdh_net_batch_join(tgdh_net* net, const char* const* names, size_t count,
                                tgdh_metrics* metrics) {
  TGDH_REQUIRE(net && names);
  return guard([&] {
    std::vector<std::string> list;
    for (size_t i = 0; i < count; ++i) {
      if (!names[i]) return fail(TGDH_E_INVALID_ARGUMENT, "null joiner name");
      list.emplace_back(names[i]);
    }
    copy_metrics(net->net->batch_join(list).metrics, metrics);
    return TGDH_OK;
  });
}

tgdh_status tgdh_net_leave(tgdh_net* net, const char* name, tgdh_metrics* metrics) {
  TGDH_REQUIRE(net && name);
  return guard([&] {
    copy_metrics(net->net->leave(name).metrics, metrics);
    return TGDH_OK;
  });
}

tgdh_status tgdh_net_partition(tgdh_net* net, const char* cells, tgdh_metrics* metrics,
                               size_t capacity, size_t* count) {
  TGDH_REQUIRE(net && cells);
  return guard([&] {
    auto script = tgdh::parse_scenario(std::string("partition ") + cells);
    if (script.size() != 1) return fail(TGDH_E_INVALID_ARGUMENT, "bad cell list");
    return copy_records(net->net->inject_partition(script.front().cells), metrics, capacity, count);
  });
}

tgdh_status tgdh_net_heal(tgdh_net* net, tgdh_metrics* metrics, size_t capacity, size_t* count) {
  TGDH_REQUIRE(net);
  return guard([&] { return copy_records(net->net->heal_partition(), metrics, capacity, count); });
}

tgdh_status tgdh_net_member_count(const tgdh_net* net, size_t* count) {
  TGDH_REQUIRE(net && count);
  *count = net->net->member_names().size();
  return TGDH_OK;
}

tgdh_status tgdh_net_tree_height(const tgdh_net* net, const char* member, uint32_t* height) {
  TGDH_REQUIRE(net && member && height);
  return guard([&] {
    *height = net->net->tree_of(member).height();
    return TGDH_OK;
  });
}

tgdh_status tgdh_net_group_key(const tgdh_net* net, const char* member, uint8_t key[32],
                               uint64_t* epoch) {
  TGDH_REQUIRE(net && member && key);
  return guard([&] {
    const auto& k = net->net->member(member).group_key();
    if (!k) return fail(TGDH_E_INVALID_STATE, std::string(member) + " holds no group key");
    std::memcpy(key, k->bytes.data(), k->bytes.size());
    if (epoch) *epoch = k->epoch;
    return TGDH_OK;
  });
}

tgdh_status tgdh_validate_scenario(const char* script, tgdh_profile profile, uint64_t seed,
                                   tgdh_report** out) {
  TGDH_REQUIRE(script && out);
  return guard([&] {
    tgdh::ScenarioOptions options;
    params_for(profile);
    options.profile = profile == TGDH_PROFILE_TEST ? tgdh::Profile::test : tgdh::Profile::production;
    options.seed = seed;
    auto handle = std::make_unique<tgdh_report>();
    handle->report = tgdh::run_scenario(tgdh::parse_scenario(script), options).report;
    handle->text = handle->report.to_text();
    *out = handle.release();
    return TGDH_OK;
  });
}

size_t tgdh_report_check_count(const tgdh_report* report) {
  return report ? report->report.checks.size() : 0;
}

size_t tgdh_report_failure_count(const tgdh_report* report) {
  return report ? report->report.failures() : 0;
}

const char* tgdh_report_text(const tgdh_report* report) { return report ? report->text.c_str() : ""; }

void tgdh_report_destroy(tgdh_report* report) { delete report; }

tgdh_status tgdh_parse_sizes(const char* spec, size_t* sizes, size_t capacity, size_t* count) {
  TGDH_REQUIRE(spec && count);
  return guard([&] {
    const auto parsed = tgdh::parse_sizes(spec);
    *count = parsed.size();
    if (!sizes) return TGDH_OK;
    if (capacity < parsed.size()) return fail(TGDH_E_BUFFER_TOO_SMALL, "sizes buffer too small");
    std::copy(parsed.begin(), parsed.end(), sizes);
    return TGDH_OK;
  });
}

tgdh_status tgdh_bench_init(const size_t* sizes, size_t count, size_t iterations,
                            tgdh_bench_mode mode, tgdh_profile profile, uint64_t seed,
                            tgdh_bench** out) {
  TGDH_REQUIRE(out);
  return guard([&] {
    tgdh::BenchConfig config;
    config.sizes = size_list(sizes, count);
    config.iterations = iterations;
    params_for(profile);
    config.profile = profile == TGDH_PROFILE_TEST ? tgdh::Profile::test : tgdh::Profile::production;
    if (mode != TGDH_BENCH_ALL_SPONSORS && mode != TGDH_BENCH_NORMALIZED) {
      return fail(TGDH_E_INVALID_ARGUMENT, "unknown bench mode");
    }
    config.mode = mode == TGDH_BENCH_ALL_SPONSORS ? tgdh::BenchMode::all_sponsors
                                                  : tgdh::BenchMode::normalized;
    config.seed = seed;
    auto handle = std::make_unique<tgdh_bench>();
    handle->rows = tgdh::bench_init(config);
    handle->csv = tgdh::bench_csv(handle->rows);
    *out = handle.release();
    return TGDH_OK;
  });
}

tgdh_status tgdh_bench_naive(const size_t* sizes, size_t count, size_t iterations,
                             tgdh_profile profile, uint64_t seed, tgdh_bench** out) {
  TGDH_REQUIRE(out);
  return guard([&] {
    tgdh::BenchConfig config;
    config.sizes = size_list(sizes, count);
    config.iterations = iterations;
    params_for(profile);
    config.profile = profile == TGDH_PROFILE_TEST ? tgdh::Profile::test : tgdh::Profile::production;
    config.seed = seed;
    auto handle = std::make_unique<tgdh_bench>();
    handle->rows = tgdh::bench_naive_gdh(config);
    handle->csv = tgdh::bench_csv(handle->rows);
    *out = handle.release();
    return TGDH_OK;
  });
}

size_t tgdh_bench_row_count(const tgdh_bench* bench) { return bench ? bench->rows.size() : 0; }

tgdh_status tgdh_bench_row_at(const tgdh_bench* bench, size_t index, tgdh_bench_row* row) {
  TGDH_REQUIRE(bench && row);
  if (index >= bench->rows.size()) return fail(TGDH_E_INVALID_ARGUMENT, "row index out of range");
  const auto& r = bench->rows[index];
  row->m = r.m;
  row->total_ms = r.total_ms;
  row->normalized_ms = r.normalized_ms;
  row->exps_measured = r.exps_measured;
  row->exps_predicted = r.exps_predicted;
  row->rounds = r.rounds;
  row->messages = r.messages;
  row->has_reference = r.reference_ms ? 1 : 0;
  row->reference_ms = r.reference_ms.value_or(0.0);
  return TGDH_OK;
}

const char* tgdh_bench_csv(const tgdh_bench* bench) { return bench ? bench->csv.c_str() : ""; }

void tgdh_bench_destroy(tgdh_bench* bench) { delete bench; }

}  // extern "C"
