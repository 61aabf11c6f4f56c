#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tgdh/group_math.hpp"
#include "tgdh/wire.hpp"

namespace tgdh {

enum class MessageKind : std::uint8_t {
  join_request = 1,
  tree_broadcast = 2,
  leave_notice = 3,
  merge_offer = 4,
  partition_notice = 5,
};

std::string_view kind_name(MessageKind kind);

/// Leave and partition notices come from the membership service, not from the
/// key agreement itself.
inline bool is_control(MessageKind kind) {
  return kind == MessageKind::leave_notice || kind == MessageKind::partition_notice;
}

struct Message {
  MessageKind kind = MessageKind::join_request;
  std::string sender;

  std::string name;                         // join_request, leave_notice
  std::optional<GroupElement> blinded_key;  // join_request
  Bytes tree;                               // tree_broadcast, merge_offer
  std::uint64_t epoch = 0;                  // tree_broadcast
  std::string sponsor;                      // tree_broadcast
  std::vector<std::string> survivors;       // partition_notice

  Bytes signature;

  friend bool operator==(const Message&, const Message&) = default;
};

Message make_join_request(const std::string& sender, const GroupElement& bk);
Message make_tree_broadcast(const std::string& sender, Bytes tree, std::uint64_t epoch);
Message make_leave_notice(const std::string& sender, const std::string& leaving);
Message make_merge_offer(const std::string& sender, Bytes tree);
Message make_partition_notice(const std::string& sender, std::vector<std::string> survivors);

/// Everything before the signature field.
Bytes signed_bytes(const Message& msg);
Bytes encode(const Message& msg);
/// Throws malformed_encoding.
Message decode(std::span<const std::uint8_t> bytes);

}  // namespace tgdh
