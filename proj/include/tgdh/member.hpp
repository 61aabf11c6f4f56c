#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tgdh/error.hpp"
#include "tgdh/group_math.hpp"
#include "tgdh/keytree.hpp"
#include "tgdh/message.hpp"
#include "tgdh/signer.hpp"

namespace tgdh {

enum class Role { idle, sponsor_pending, awaiting_broadcast };

std::string_view to_string(Role role);

struct MemberCounters {
  std::uint64_t signatures = 0;
  std::uint64_t verifications = 0;
  ExpCounter exponentiations;
  /// Exponentiations spent while rekeying as a sponsor.
  std::uint64_t sponsor_exponentiations = 0;
  std::uint64_t broadcasts = 0;
};

/// One participant. Messages are taken in with receive() (signature and epoch
/// checks happen there) and acted upon in flush(), which sees everything
/// delivered in the same round at once, in canonical order.
class Member {
 public:
  static constexpr std::size_t kMaxDeferred = 1024;

  Member(std::string name, const GroupParams& params, std::shared_ptr<Signer> signer,
         std::uint64_t seed);

  /// Becomes the only member of a new group at epoch 0.
  void found_group();

  Message initiate_join();
  /// Sent by the group's join sponsor alongside an incoming join request.
  Message offer_for_join();
  /// Sent by a cell representative on heal; carries the root blinded key.
  Message offer_merge();
  Message initiate_leave();
  Message announce_partition(std::vector<std::string> survivors);

  /// Verifies and buffers. Returns the reason when the message is dropped.
  std::optional<ErrorCode> receive(const Message& msg);
  std::vector<Message> flush();
  /// receive() followed by flush(); throws Error on the first failure.
  std::vector<Message> handle(const Message& msg);

  /// Errors raised while flushing since the last call.
  std::vector<Error> take_errors();

  const std::string& name() const { return name_; }
  const GroupParams& params() const { return *params_; }
  const Exponent& leaf_secret() const { return leaf_secret_; }
  const std::optional<KeyTree>& tree() const { return tree_; }
  const std::optional<GroupKey>& group_key() const { return group_key_; }
  /// Root element behind the current group key.
  const std::optional<GroupElement>& root_element() const { return root_; }
  Role role() const { return role_; }
  bool busy() const { return op_.has_value(); }
  std::size_t deferred() const { return deferred_.size(); }
  const MemberCounters& counters() const { return counters_; }
  /// Every secret this member currently holds: leaf plus cached path secrets.
  std::vector<Exponent> secrets() const;

  /// Full path recomputation from the cached leaf secret, as every member does
  /// in the all-sponsors benchmark mode. Returns the exponentiations spent.
  std::uint64_t recompute_full_path();

 private:
  enum class OpKind { join, leave, merge, partition };
  struct Op {
    OpKind kind;
    std::uint64_t target_epoch = 0;
    std::optional<KeyTree> expected;  // joiner only
    bool acted = false;
  };
  struct Level {
    Exponent secret;
    std::optional<GroupElement> joint;
    std::optional<GroupElement> sibling_used;
  };

  Message sign(Message msg);
  bool verify(const Message& msg);

  void process(std::vector<Message> batch, std::vector<Message>& out);
  void on_joins(const std::vector<Message>& requests, const std::vector<Message>& offers,
                std::vector<Message>& out);
  void on_merge(const std::vector<Message>& offers, std::vector<Message>& out);
  void on_leave(const Message& notice, std::vector<Message>& out);
  void on_partition(const Message& notice, std::vector<Message>& out);
  void on_broadcast(const Message& msg);

  void begin(OpKind kind, std::uint64_t target);
  /// Refreshes the leaf secret, recomputes the whole path and broadcasts.
  void sponsor_rekey(std::vector<Message>& out);
  /// Partition duty: computes as far up as sibling keys allow and publishes
  /// blinded keys for missing nodes, or for every path node after a refresh.
  void partition_act(bool refresh, std::vector<Message>& out);
  bool partition_should_act() const;

  /// Walks the path using cached levels. Returns the number of levels reached.
  std::size_t advance(bool publish_all, bool publish_missing);
  void load_cache(const KeyPath& path);
  void try_finish();
  void forget_group();
  void fail(ErrorCode code, const std::string& what);

  std::string name_;
  const GroupParams* params_;
  std::shared_ptr<Signer> signer_;
  Rng rng_;
  MemberCounters counters_;
  Exponent leaf_secret_;
  GroupElement leaf_bk_;
  bool joining_ = false;

  std::optional<KeyTree> tree_;
  std::vector<Level> cache_;  // index = height above the leaf
  std::optional<GroupElement> root_;
  std::optional<GroupKey> group_key_;
  Role role_ = Role::idle;
  std::optional<Op> op_;

  std::vector<Message> inbox_;
  std::deque<Message> deferred_;
  std::vector<Error> errors_;
};

}  // namespace tgdh
