#include <stdio.h>
#include <string.h>

#include "tgdh/tgdh.h"

static int failures = 0;

#define EXPECT(cond)                                          \
  do {                                                        \
    if (!(cond)) {                                            \
      fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                             \
    }                                                         \
  } while (0)

static void test_network(void) {
  tgdh_net* net = NULL;
  tgdh_metrics m;
  uint8_t k1[32], k2[32];
  uint64_t e1 = 0, e2 = 0;
  size_t count = 0;
  uint32_t height = 0;
  const char* batch[] = {"erin", "frank"};
  tgdh_metrics cells[4];

  EXPECT(tgdh_net_create(TGDH_PROFILE_TEST, 3, &net) == TGDH_OK);
  EXPECT(tgdh_net_init(net, "alice") == TGDH_OK);
  EXPECT(tgdh_net_join(net, "bob", &m) == TGDH_OK);
  EXPECT(m.rounds == 2 && m.messages == 3 && m.unicasts == 0 && m.multicasts == 3);
  EXPECT(m.signatures == 2 && m.verifications == 3);
  EXPECT(tgdh_net_join(net, "carol", NULL) == TGDH_OK);
  EXPECT(tgdh_net_join(net, "dave", NULL) == TGDH_OK);
  EXPECT(tgdh_net_leave(net, "bob", &m) == TGDH_OK);
  EXPECT(m.rounds == 1 && m.messages == 1 && m.signatures == 1 && m.verifications == 1);
  EXPECT(tgdh_net_batch_join(net, batch, 2, &m) == TGDH_OK);
  EXPECT(m.tree_broadcasts == 1);

  EXPECT(tgdh_net_member_count(net, &count) == TGDH_OK && count == 5);
  EXPECT(tgdh_net_tree_height(net, "alice", &height) == TGDH_OK && height >= 2);
  EXPECT(tgdh_net_group_key(net, "alice", k1, &e1) == TGDH_OK);
  EXPECT(tgdh_net_group_key(net, "frank", k2, &e2) == TGDH_OK);
  EXPECT(memcmp(k1, k2, 32) == 0 && e1 == e2 && e1 == 5);

  EXPECT(tgdh_net_partition(net, "alice,carol|dave,erin,frank", cells, 1, &count) ==
         TGDH_E_BUFFER_TOO_SMALL);
  EXPECT(count == 2);
  EXPECT(tgdh_net_heal(net, cells, 4, &count) == TGDH_OK && count == 1);
  EXPECT(cells[0].rounds == 2 && cells[0].messages == 3);
  EXPECT(tgdh_net_group_key(net, "carol", k1, NULL) == TGDH_OK);
  EXPECT(tgdh_net_group_key(net, "erin", k2, &e2) == TGDH_OK);
  EXPECT(memcmp(k1, k2, 32) == 0);

  EXPECT(tgdh_net_join(net, "alice", NULL) == TGDH_E_DUPLICATE_MEMBER);
  EXPECT(strstr(tgdh_last_error(), "alice") != NULL);
  EXPECT(tgdh_net_leave(net, "nobody", NULL) == TGDH_E_UNKNOWN_MEMBER);
  EXPECT(tgdh_net_heal(net, NULL, 0, NULL) == TGDH_E_INVALID_STATE);
  EXPECT(tgdh_net_partition(net, "alice|", NULL, 0, NULL) == TGDH_E_SCENARIO_PARSE);
  EXPECT(tgdh_net_group_key(net, "bob", k1, NULL) == TGDH_E_UNKNOWN_MEMBER);
  EXPECT(tgdh_net_join(NULL, "x", NULL) == TGDH_E_INVALID_ARGUMENT);
  EXPECT(strcmp(tgdh_status_name(TGDH_E_DUPLICATE_MEMBER), "DuplicateMember") == 0);
  EXPECT(strcmp(tgdh_status_name(TGDH_OK), "Ok") == 0);
  tgdh_net_destroy(net);
  tgdh_net_destroy(NULL);
}

static void test_validate(void) {
  tgdh_report* report = NULL;
  EXPECT(tgdh_validate_scenario("init a\njoin b\nleave a\nexpect-key-agreement\n",
                                TGDH_PROFILE_TEST, 1, &report) == TGDH_OK);
  EXPECT(tgdh_report_check_count(report) > 0);
  EXPECT(tgdh_report_failure_count(report) == 0);
  EXPECT(strstr(tgdh_report_text(report), "PASS line=2 op=\"join b\" check=rounds") != NULL);
  tgdh_report_destroy(report);

  report = NULL;
  EXPECT(tgdh_validate_scenario("init a\njoin b\nexpect-metrics messages=9\n", TGDH_PROFILE_TEST, 1,
                                &report) == TGDH_OK);
  EXPECT(tgdh_report_failure_count(report) == 1);
  tgdh_report_destroy(report);

  report = NULL;
  EXPECT(tgdh_validate_scenario("init a\nwobble\n", TGDH_PROFILE_TEST, 1, &report) ==
         TGDH_E_SCENARIO_PARSE);
  EXPECT(report == NULL);
  EXPECT(strstr(tgdh_last_error(), "line 2") != NULL);
}

static void test_bench(void) {
  size_t sizes[8];
  size_t count = 0;
  tgdh_bench* bench = NULL;
  tgdh_bench_row row;

  EXPECT(tgdh_parse_sizes("1..5", NULL, 0, &count) == TGDH_OK && count == 5);
  EXPECT(tgdh_parse_sizes("1..5", sizes, 2, &count) == TGDH_E_BUFFER_TOO_SMALL);
  EXPECT(tgdh_parse_sizes("1..5", sizes, 8, &count) == TGDH_OK && sizes[4] == 5);
  EXPECT(tgdh_parse_sizes("5..1", sizes, 8, &count) == TGDH_E_INVALID_ARGUMENT);

  EXPECT(tgdh_bench_init(sizes, 5, 1, TGDH_BENCH_NORMALIZED, TGDH_PROFILE_TEST, 1, &bench) ==
         TGDH_OK);
  EXPECT(tgdh_bench_row_count(bench) == 5);
  EXPECT(tgdh_bench_row_at(bench, 4, &row) == TGDH_OK);
  EXPECT(row.m == 5 && row.exps_measured == row.exps_predicted && row.rounds == 8);
  EXPECT(!row.has_reference);
  EXPECT(tgdh_bench_row_at(bench, 5, &row) == TGDH_E_INVALID_ARGUMENT);
  EXPECT(strncmp(tgdh_bench_csv(bench), "m,total_ms,", 11) == 0);
  tgdh_bench_destroy(bench);

  bench = NULL;
  EXPECT(tgdh_bench_naive(sizes, 5, 1, TGDH_PROFILE_TEST, 1, &bench) == TGDH_OK);
  EXPECT(tgdh_bench_row_at(bench, 1, &row) == TGDH_OK && row.exps_measured == 2);
  tgdh_bench_destroy(bench);

  EXPECT(tgdh_bench_init(sizes, 5, 0, TGDH_BENCH_NORMALIZED, TGDH_PROFILE_TEST, 1, &bench) ==
         TGDH_E_INVALID_ARGUMENT);
  EXPECT(tgdh_bench_init(sizes, 5, 1, (tgdh_bench_mode)7, TGDH_PROFILE_TEST, 1, &bench) ==
         TGDH_E_INVALID_ARGUMENT);
  EXPECT(tgdh_net_create((tgdh_profile)9, 1, &(tgdh_net*){NULL}) == TGDH_E_INVALID_ARGUMENT);
}

int main(void) {
  test_network();
  test_validate();
  test_bench();
  if (failures) {
    fprintf(stderr, "%d failure(s)\n", failures);
    return 1;
  }
  puts("c api: ok");
  return 0;
}
