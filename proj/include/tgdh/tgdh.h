#ifndef TGDH_TGDH_H
#define TGDH_TGDH_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define TGDH_API __declspec(dllexport)
#else
#define TGDH_API __attribute__((visibility("default")))
#endif

typedef enum tgdh_status {
  TGDH_OK = 0,
  TGDH_E_INVALID_ARGUMENT,
  TGDH_E_DUPLICATE_MEMBER,
  TGDH_E_UNKNOWN_MEMBER,
  TGDH_E_LAST_MEMBER,
  TGDH_E_EMPTY_SURVIVOR_SET,
  TGDH_E_OVERLAPPING_MEMBERSHIP,
  TGDH_E_MISSING_SIBLING_BLINDED_KEY,
  TGDH_E_MALFORMED_ENCODING,
  TGDH_E_TREE_TOO_DEEP,
  TGDH_E_BAD_SIGNATURE,
  TGDH_E_STALE_EPOCH,
  TGDH_E_NOT_A_MEMBER,
  TGDH_E_PROTOCOL_OVERLOAD,
  TGDH_E_INVALID_STATE,
  TGDH_E_NON_QUIESCENCE,
  TGDH_E_INVALID_CELL_COVER,
  TGDH_E_SCENARIO_PARSE,
  TGDH_E_BUFFER_TOO_SMALL,
  TGDH_E_INTERNAL
} tgdh_status;

typedef enum tgdh_profile { TGDH_PROFILE_TEST = 0, TGDH_PROFILE_PRODUCTION = 1 } tgdh_profile;

typedef enum tgdh_bench_mode {
  TGDH_BENCH_ALL_SPONSORS = 0,
  TGDH_BENCH_NORMALIZED = 1
} tgdh_bench_mode;

typedef struct tgdh_metrics {
  uint64_t rounds;
  uint64_t messages;
  uint64_t unicasts;
  uint64_t multicasts;
  uint64_t exponentiations;
  uint64_t signatures;
  uint64_t verifications;
  uint64_t sponsor_exponentiations;
  uint64_t tree_broadcasts;
} tgdh_metrics;

typedef struct tgdh_bench_row {
  size_t m;
  double total_ms;
  double normalized_ms;
  uint64_t exps_measured;
  uint64_t exps_predicted;
  uint64_t rounds;
  uint64_t messages;
  int has_reference;
  double reference_ms;
} tgdh_bench_row;

typedef struct tgdh_net tgdh_net;
typedef struct tgdh_report tgdh_report;
typedef struct tgdh_bench tgdh_bench;

/* Message of the last failure on the calling thread; never NULL. */
TGDH_API const char* tgdh_last_error(void);
TGDH_API const char* tgdh_status_name(tgdh_status status);

/* Simulated network. Metrics outputs may be NULL. */
TGDH_API tgdh_status tgdh_net_create(tgdh_profile profile, uint64_t seed, tgdh_net** out);
TGDH_API void tgdh_net_destroy(tgdh_net* net);
TGDH_API tgdh_status tgdh_net_init(tgdh_net* net, const char* founder);
TGDH_API tgdh_status tgdh_net_join(tgdh_net* net, const char* name, tgdh_metrics* metrics);
TGDH_API tgdh_status tgdh_net_batch_join(tgdh_net* net, const char* const* names, size_t count,
                                         tgdh_metrics* metrics);
TGDH_API tgdh_status tgdh_net_leave(tgdh_net* net, const char* name, tgdh_metrics* metrics);
/* cells: "a,b|c,d". Writes up to `capacity` per-cell metrics, sets *count to the cell count. */
TGDH_API tgdh_status tgdh_net_partition(tgdh_net* net, const char* cells, tgdh_metrics* metrics,
                                        size_t capacity, size_t* count);
TGDH_API tgdh_status tgdh_net_heal(tgdh_net* net, tgdh_metrics* metrics, size_t capacity,
                                   size_t* count);
TGDH_API tgdh_status tgdh_net_member_count(const tgdh_net* net, size_t* count);
TGDH_API tgdh_status tgdh_net_tree_height(const tgdh_net* net, const char* member,
                                          uint32_t* height);
TGDH_API tgdh_status tgdh_net_group_key(const tgdh_net* net, const char* member,
                                        uint8_t key[32], uint64_t* epoch);

/* Runs a scenario script with the cost checks enabled. */
TGDH_API tgdh_status tgdh_validate_scenario(const char* script, tgdh_profile profile,
                                            uint64_t seed, tgdh_report** out);
TGDH_API size_t tgdh_report_check_count(const tgdh_report* report);
TGDH_API size_t tgdh_report_failure_count(const tgdh_report* report);
TGDH_API const char* tgdh_report_text(const tgdh_report* report);
TGDH_API void tgdh_report_destroy(tgdh_report* report);

/* Group sizes: "1..70", "8..128:4", "1,2,5". Set sizes to NULL to query the count. */
TGDH_API tgdh_status tgdh_parse_sizes(const char* spec, size_t* sizes, size_t capacity,
                                      size_t* count);

TGDH_API tgdh_status tgdh_bench_init(const size_t* sizes, size_t count, size_t iterations,
                                     tgdh_bench_mode mode, tgdh_profile profile, uint64_t seed,
                                     tgdh_bench** out);
TGDH_API tgdh_status tgdh_bench_naive(const size_t* sizes, size_t count, size_t iterations,
                                      tgdh_profile profile, uint64_t seed, tgdh_bench** out);
TGDH_API size_t tgdh_bench_row_count(const tgdh_bench* bench);
TGDH_API tgdh_status tgdh_bench_row_at(const tgdh_bench* bench, size_t index, tgdh_bench_row* row);
TGDH_API const char* tgdh_bench_csv(const tgdh_bench* bench);
TGDH_API void tgdh_bench_destroy(tgdh_bench* bench);

#ifdef __cplusplus
}
#endif

#endif
