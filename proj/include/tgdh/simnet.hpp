#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tgdh/member.hpp"

namespace tgdh {

/// Counters for one membership operation. Signatures, verifications and
/// exponentiations are critical-path counts: per round, the busiest member.
struct OpMetrics {
  std::uint64_t rounds = 0;
  std::uint64_t messages = 0;
  std::uint64_t unicasts = 0;
  std::uint64_t multicasts = 0;
  std::uint64_t exponentiations = 0;
  std::uint64_t signatures = 0;
  std::uint64_t verifications = 0;
  /// Rekey work done by whoever broadcast, summed.
  std::uint64_t sponsor_exponentiations = 0;
  /// All exponentiations by anyone, summed.
  std::uint64_t total_exponentiations = 0;
  std::uint64_t tree_broadcasts = 0;

  friend bool operator==(const OpMetrics&, const OpMetrics&) = default;
};

enum class OpKind { init, join, batch_join, leave, partition, merge };

std::string_view to_string(OpKind kind);

struct OpRecord {
  OpKind kind = OpKind::init;
  /// Joiners, the leaver, or the survivors / merged members.
  std::vector<std::string> subjects;
  /// Members the metrics cover.
  std::set<std::string> scope;
  std::uint32_t height_before = 0;
  std::uint32_t height_after = 0;
  std::uint64_t epoch_after = 0;
  OpMetrics metrics;
  /// Members that sent a tree broadcast, with their rekey exponentiations.
  std::map<std::string, std::uint64_t> sponsors;
  /// Leaf depth of each sponsor in the resulting tree.
  std::map<std::string, std::uint32_t> sponsor_depths;
  /// Fresh blinding by new members when they announce themselves.
  std::uint64_t joiner_exponentiations = 0;
  std::vector<std::string> errors;
};

class SimNetwork {
 public:
  /// `shuffle_seed` permutes member and delivery order within each round.
  SimNetwork(const GroupParams& params, std::uint64_t seed,
             std::optional<std::uint64_t> shuffle_seed = std::nullopt,
             std::size_t max_rounds = 256);

  OpRecord init(const std::string& founder);
  OpRecord join(const std::string& name);
  OpRecord batch_join(const std::vector<std::string>& names);
  OpRecord leave(const std::string& name);
  /// One record per cell.
  std::vector<OpRecord> inject_partition(const std::vector<std::set<std::string>>& cells);
  /// One record per pairwise merge, in cell order.
  std::vector<OpRecord> heal_partition();

  /// One synchronous delivery step.
  void step();
  /// Steps until nothing is pending; throws non_quiescence past max_rounds.
  void run_until_quiescent();
  bool quiescent() const { return queue_.empty(); }

  /// Places an arbitrary message on the wire for the next step (tests).
  void inject(const Message& msg);

  const GroupParams& params() const { return *params_; }
  std::uint64_t round() const { return round_; }
  bool partitioned() const { return cells_.size() > 1; }
  const std::vector<std::set<std::string>>& cells() const { return cells_; }
  std::vector<std::string> member_names() const;
  const Member& member(const std::string& name) const;
  Member& member(const std::string& name);
  bool has_member(const std::string& name) const { return members_.count(name) != 0; }
  /// State of a member as it was just before it left.
  const Member* departed(const std::string& name) const;
  /// Current tree of the cell containing `name`.
  const KeyTree& tree_of(const std::string& name) const;

  const std::vector<std::string>& trace() const { return trace_; }
  const std::vector<Bytes>& wire_log() const { return wire_log_; }
  const std::vector<OpRecord>& history() const { return history_; }
  std::shared_ptr<Signer> signer() const { return signer_; }

 private:
  struct Pending {
    Message msg;
    std::size_t bytes;
  };
  struct Account {
    std::set<std::string> scope;
    OpMetrics metrics;
    std::set<std::string> sponsors;
  };
  struct Snapshot {
    std::map<std::string, MemberCounters> counters;
  };

  Member& spawn(const std::string& name);
  std::size_t cell_index(const std::string& name) const;
  Snapshot snapshot() const;
  void settle(const Snapshot& before);
  void emit(const Message& msg);
  void deliver_control(const Message& msg, std::size_t cell);
  void collect_errors(Member& m);
  std::vector<OpRecord> run_accounts(OpKind kind, std::vector<std::vector<std::string>> subjects,
                                     std::vector<std::uint32_t> heights_before,
                                     std::uint64_t joiner_exps);
  template <typename T>
  void maybe_shuffle(std::vector<T>& items);

  const GroupParams* params_;
  std::uint64_t seed_;
  std::optional<std::mt19937_64> shuffle_;
  std::size_t max_rounds_;
  std::shared_ptr<Signer> signer_;
  std::uint64_t spawned_ = 0;

  std::map<std::string, Member> members_;
  std::map<std::string, Member> departed_;
  std::vector<std::set<std::string>> cells_;
  std::vector<Pending> queue_;
  std::vector<Account> accounts_;
  std::vector<std::string> pending_errors_;
  Snapshot op_start_;
  std::uint64_t round_ = 0;

  std::vector<std::string> trace_;
  std::vector<Bytes> wire_log_;
  std::vector<OpRecord> history_;
};

}  // namespace tgdh
