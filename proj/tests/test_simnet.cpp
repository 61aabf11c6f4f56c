#include <doctest.h>

#include <regex>

#include "support/oracle.hpp"
#include "tgdh/error.hpp"
#include "tgdh/simnet.hpp"

using namespace tgdh;

namespace {

// Every member of every cell holds the oracle's key for its cell's tree.
void check_agreement(const SimNetwork& net) {
  const auto grp = oracle::from(net.params());
  for (const auto& cell : net.cells()) {
    const KeyTree& tree = net.tree_of(*cell.begin());
    std::map<std::string, mpz_class> secrets;
    for (const auto& name : cell) secrets[name] = net.member(name).leaf_secret().value();
    CHECK(tree.members().size() == cell.size());
    const auto expected = oracle::group_key(grp, oracle::root_key_oracle(grp, tree, secrets),
                                            tree.epoch());
    for (const auto& name : cell) {
      const auto& key = net.member(name).group_key();
      REQUIRE(key);
      CHECK(key->bytes == expected);
      CHECK(key->epoch == tree.epoch());
      CHECK(net.tree_of(name) == tree);
    }
  }
}

void check_exact(const OpMetrics& m, std::array<std::uint64_t, 6> want) {
  CHECK(m.rounds == want[0]);
  CHECK(m.messages == want[1]);
  CHECK(m.unicasts == want[2]);
  CHECK(m.multicasts == want[3]);
  CHECK(m.signatures == want[4]);
  CHECK(m.verifications == want[5]);
}

SimNetwork grown(std::size_t m, std::uint64_t seed = 1) {
  SimNetwork net(GroupParams::test(), seed);
  net.init("n0");
  for (std::size_t i = 1; i < m; ++i) net.join("n" + std::to_string(i));
  return net;
}

}  // namespace

TEST_CASE("init founds a singleton group") {
  SimNetwork net(GroupParams::test(), 4);
  const OpRecord rec = net.init("solo");
  CHECK(rec.kind == OpKind::init);
  CHECK(net.member_names() == std::vector<std::string>{"solo"});
  check_agreement(net);
  CHECK_THROWS_AS(net.init("again"), Error);
}

TEST_CASE("join and leave costs are exact at every size") {
  SimNetwork net(GroupParams::test(), 2);
  net.init("n0");
  for (std::size_t i = 1; i < 20; ++i) {
    const OpRecord rec = net.join("n" + std::to_string(i));
    CHECK(rec.errors.empty());
    check_exact(rec.metrics, {2, 3, 0, 3, 2, 3});
    CHECK(rec.metrics.tree_broadcasts == 1);
    CHECK(rec.epoch_after == i);
    check_agreement(net);
  }
  for (std::size_t i = 0; i < 19; i += 2) {
    const OpRecord rec = net.leave("n" + std::to_string(i));
    CHECK(rec.errors.empty());
    check_exact(rec.metrics, {1, 1, 0, 1, 1, 1});
    check_agreement(net);
  }
}

TEST_CASE("sponsor exponentiations match the tree recount") {
  SimNetwork net = grown(12, 9);
  const OpRecord join = net.join("late");
  REQUIRE(join.sponsors.size() == 1);
  const auto& [sponsor, spent] = *join.sponsors.begin();
  CHECK(spent == oracle::sponsor_recount(net.tree_of("late"), sponsor));
  CHECK(join.metrics.sponsor_exponentiations == spent);

  const OpRecord leave = net.leave("n3");
  REQUIRE(leave.sponsors.size() == 1);
  CHECK(leave.sponsors.begin()->second ==
        oracle::sponsor_recount(net.tree_of("n0"), leave.sponsors.begin()->first));
}

TEST_CASE("partition and heal restore agreement") {
  SimNetwork net = grown(9, 3);
  const auto cells = net.inject_partition({{"n0", "n2", "n4", "n8"}, {"n1", "n3"}, {"n5", "n6", "n7"}});
  CHECK(cells.size() == 3);
  CHECK(net.partitioned());
  for (const auto& rec : cells) {
    CHECK(rec.errors.empty());
    CHECK(rec.metrics.rounds <= std::max<std::uint32_t>(rec.height_before, 1));
    CHECK(rec.metrics.unicasts == 0);
  }
  check_agreement(net);
  const std::uint64_t before = net.tree_of("n0").epoch();

  const auto merges = net.heal_partition();
  CHECK(merges.size() == 2);
  for (const auto& rec : merges) {
    CHECK(rec.errors.empty());
    check_exact(rec.metrics, {2, 3, 0, 3, 2, 3});
  }
  CHECK_FALSE(net.partitioned());
  check_agreement(net);
  CHECK(net.tree_of("n0").epoch() > before);
  CHECK(net.tree_of("n0").member_count() == 9);
}

TEST_CASE("batch join sends one tree broadcast") {
  SimNetwork net = grown(5, 8);
  const OpRecord rec = net.batch_join({"z", "x", "y"});
  CHECK(rec.errors.empty());
  CHECK(rec.metrics.tree_broadcasts == 1);
  CHECK(rec.metrics.rounds == 2);
  CHECK(rec.metrics.messages == 5);
  check_agreement(net);
}

TEST_CASE("trace lines follow the fixed format") {
  SimNetwork net = grown(4);
  net.leave("n1");
  const std::regex line(R"(round=\d+ from=\S+ kind=(join-request|tree-broadcast|leave-notice|merge-offer|partition-notice) bytes=[0-9a-f]+)");
  REQUIRE_FALSE(net.trace().empty());
  for (const auto& l : net.trace()) CHECK(std::regex_match(l, line));
  CHECK(net.trace().front().rfind("round=1 from=n1 kind=join-request", 0) == 0);
}

TEST_CASE("same seed gives the same trace; shuffling keeps keys and counts") {
  auto run = [](std::optional<std::uint64_t> shuffle) {
    SimNetwork net(GroupParams::test(), 21, shuffle);
    net.init("a");
    for (auto n : {"b", "c", "d", "e", "f"}) net.join(n);
    net.leave("c");
    net.inject_partition({{"a", "b"}, {"d", "e", "f"}});
    net.heal_partition();
    net.batch_join({"g", "h"});
    std::vector<OpMetrics> counts;
    for (const auto& r : net.history()) counts.push_back(r.metrics);
    return std::make_tuple(net.trace(), counts, *net.member("a").group_key());
  };
  const auto base = run(std::nullopt);
  CHECK(std::get<0>(run(std::nullopt)) == std::get<0>(base));
  for (std::uint64_t s : {1u, 2u, 3u}) {
    const auto shuffled = run(s);
    CHECK(std::get<1>(shuffled) == std::get<1>(base));
    CHECK(std::get<2>(shuffled) == std::get<2>(base));
  }
}

TEST_CASE("membership errors") {
  SimNetwork net = grown(3);
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::invalid_argument;
  };
  CHECK(code_of([&] { net.join("n1"); }) == ErrorCode::duplicate_member);
  CHECK(code_of([&] { net.leave("ghost"); }) == ErrorCode::unknown_member);
  CHECK(code_of([&] { net.inject_partition({{"n0", "n1", "n2"}}); }) == ErrorCode::invalid_cell_cover);
  CHECK(code_of([&] { net.inject_partition({{"n0", "n1"}, {"n1", "n2"}}); }) ==
        ErrorCode::invalid_cell_cover);
  CHECK(code_of([&] { net.inject_partition({{"n0"}, {"n1"}}); }) == ErrorCode::invalid_cell_cover);
  CHECK(code_of([&] { net.heal_partition(); }) == ErrorCode::invalid_state);
  net.inject_partition({{"n0"}, {"n1", "n2"}});
  CHECK(code_of([&] { net.join("n9"); }) == ErrorCode::invalid_state);
  CHECK(code_of([&] { net.leave("n0"); }) == ErrorCode::last_member);
  net.heal_partition();
  CHECK(net.tree_of("n2").member_count() == 3);
}

TEST_CASE("departed members keep a snapshot from before the notice") {
  SimNetwork net = grown(4);
  const auto key = *net.member("n2").group_key();
  net.leave("n2");
  CHECK_FALSE(net.has_member("n2"));
  const Member* gone = net.departed("n2");
  REQUIRE(gone);
  CHECK(*gone->group_key() == key);
  CHECK(net.departed("n0") == nullptr);
}
