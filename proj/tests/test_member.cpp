#include <doctest.h>

#include <memory>

#include "support/oracle.hpp"
#include "tgdh/error.hpp"
#include "tgdh/member.hpp"
#include "tgdh/signer.hpp"

using namespace tgdh;

namespace {

struct Pair {
  std::shared_ptr<Signer> signer = std::make_shared<HmacSigner>(3);
  Member alice{"alice", GroupParams::test(), signer, 1};
  Member bob{"bob", GroupParams::test(), signer, 2};
};

void deliver(const std::vector<Message>& msgs, std::initializer_list<Member*> to) {
  for (Member* m : to) {
    for (const auto& msg : msgs) REQUIRE_FALSE(m->receive(msg));
  }
}

std::vector<Message> flush_all(std::initializer_list<Member*> who) {
  std::vector<Message> out;
  for (Member* m : who) {
    auto produced = m->flush();
    auto errors = m->take_errors();
    CHECK(errors.empty());
    out.insert(out.end(), produced.begin(), produced.end());
  }
  return out;
}

mpz_class expected_root(const Member& a, const Member& b) {
  const auto grp = oracle::from(a.params());
  return oracle::root_key_oracle(
      grp, *a.tree(), {{a.name(), a.leaf_secret().value()}, {b.name(), b.leaf_secret().value()}});
}

}  // namespace

TEST_CASE("founder holds a singleton key") {
  Pair p;
  CHECK(p.alice.counters().exponentiations.count == 1);
  p.alice.found_group();
  REQUIRE(p.alice.group_key());
  CHECK(p.alice.group_key()->epoch == 0);
  const auto grp = oracle::from(GroupParams::test());
  const mpz_class root =
      oracle::root_key_oracle(grp, *p.alice.tree(), {{"alice", p.alice.leaf_secret().value()}});
  CHECK(p.alice.group_key()->bytes == oracle::group_key(grp, root, 0));
  CHECK(p.alice.role() == Role::idle);
}

TEST_CASE("two members agree after a join exchange") {
  Pair p;
  p.alice.found_group();
  const Message request = p.bob.initiate_join();
  const Message offer = p.alice.offer_for_join();
  deliver({request, offer}, {&p.alice, &p.bob});
  const auto broadcasts = flush_all({&p.alice, &p.bob});
  REQUIRE(broadcasts.size() == 1);
  CHECK(broadcasts[0].kind == MessageKind::tree_broadcast);
  CHECK(broadcasts[0].sender == "alice");
  CHECK(broadcasts[0].epoch == 1);
  CHECK(p.bob.role() == Role::awaiting_broadcast);
  deliver(broadcasts, {&p.alice, &p.bob});
  CHECK(flush_all({&p.alice, &p.bob}).empty());

  REQUIRE(p.alice.group_key());
  REQUIRE(p.bob.group_key());
  CHECK(*p.alice.group_key() == *p.bob.group_key());
  CHECK(p.alice.group_key()->epoch == 1);
  const auto grp = oracle::from(GroupParams::test());
  CHECK(p.alice.group_key()->bytes == oracle::group_key(grp, expected_root(p.alice, p.bob), 1));
  CHECK_FALSE(p.alice.busy());
  CHECK_FALSE(p.bob.busy());
  CHECK(p.alice.counters().broadcasts == 1);
  CHECK(p.alice.counters().sponsor_exponentiations == 2);
}

TEST_CASE("forged and stale messages are dropped at receive") {
  Pair p;
  p.alice.found_group();
  Message request = p.bob.initiate_join();
  request.signature[0] ^= 1;
  CHECK(p.alice.receive(request) == ErrorCode::bad_signature);

  deliver({p.bob.initiate_join(), p.alice.offer_for_join()}, {&p.alice, &p.bob});
  const auto broadcasts = flush_all({&p.alice, &p.bob});
  deliver(broadcasts, {&p.alice, &p.bob});
  flush_all({&p.alice, &p.bob});

  Message old = make_tree_broadcast("alice", serialize(*p.alice.tree()), 0);
  old.signature = p.signer->sign("alice", signed_bytes(old));
  CHECK(p.bob.receive(old) == ErrorCode::stale_epoch);
  CHECK_THROWS_AS(p.bob.handle(old), Error);
}

TEST_CASE("a leaver replaying later traffic gets no key") {
  Pair p;
  Member carol("carol", GroupParams::test(), p.signer, 3);
  p.alice.found_group();
  deliver({p.bob.initiate_join(), p.alice.offer_for_join()}, {&p.alice, &p.bob});
  deliver(flush_all({&p.alice, &p.bob}), {&p.alice, &p.bob});
  flush_all({&p.alice, &p.bob});

  const Member bob_before = p.bob;
  const Message notice = p.bob.initiate_leave();
  deliver({notice}, {&p.alice});
  const auto rekey = flush_all({&p.alice});
  REQUIRE(rekey.size() == 1);
  deliver(rekey, {&p.alice});
  flush_all({&p.alice});
  CHECK(p.alice.group_key()->epoch == 2);
  CHECK(p.alice.tree()->members() == std::vector<std::string>{"alice"});

  Member ghost = bob_before;
  REQUIRE_FALSE(ghost.receive(rekey[0]));
  ghost.flush();
  const auto errors = ghost.take_errors();
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].code() == ErrorCode::not_a_member);
  CHECK_FALSE(ghost.group_key());
  CHECK_FALSE(ghost.tree());
}

TEST_CASE("operations on a member outside any group fail") {
  Pair p;
  CHECK_THROWS_AS(p.bob.offer_for_join(), Error);
  CHECK_THROWS_AS(p.bob.initiate_leave(), Error);
  p.alice.found_group();
  CHECK_THROWS_AS(p.alice.initiate_join(), Error);
  CHECK_THROWS_AS(p.alice.announce_partition({"zed"}), Error);
}

TEST_CASE("full path recomputation costs two per level") {
  Pair p;
  p.alice.found_group();
  CHECK(p.alice.recompute_full_path() == 1);
  deliver({p.bob.initiate_join(), p.alice.offer_for_join()}, {&p.alice, &p.bob});
  deliver(flush_all({&p.alice, &p.bob}), {&p.alice, &p.bob});
  flush_all({&p.alice, &p.bob});
  const auto key = *p.bob.group_key();
  CHECK(p.bob.recompute_full_path() == 2);
  CHECK(*p.bob.group_key() == key);
}
