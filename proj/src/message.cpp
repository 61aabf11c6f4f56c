#include "tgdh/message.hpp"

#include "tgdh/error.hpp"

namespace tgdh {
namespace {

void write_body(ByteWriter& w, const Message& msg) {
  w.u8(static_cast<std::uint8_t>(msg.kind));
  w.lp16(msg.sender);
  switch (msg.kind) {
    case MessageKind::join_request:
      if (!msg.blinded_key) {
        throw Error(ErrorCode::invalid_argument, "join request without blinded key");
      }
      w.lp16(msg.name);
      w.lp16(encode_integer(msg.blinded_key->value()));
      break;
    case MessageKind::tree_broadcast:
      w.u32(static_cast<std::uint32_t>(msg.tree.size()));
      w.raw(msg.tree);
      w.u64(msg.epoch);
      w.lp16(msg.sponsor);
      break;
    case MessageKind::leave_notice:
      w.lp16(msg.name);
      break;
    case MessageKind::merge_offer:
      w.u32(static_cast<std::uint32_t>(msg.tree.size()));
      w.raw(msg.tree);
      break;
    case MessageKind::partition_notice:
      if (msg.survivors.size() > 0xFFFF) {
        throw Error(ErrorCode::invalid_argument, "too many survivors");
      }
      w.u16(static_cast<std::uint16_t>(msg.survivors.size()));
      for (const auto& s : msg.survivors) w.lp16(s);
      break;
  }
}

}  // namespace

std::string_view kind_name(MessageKind kind) {
  switch (kind) {
    case MessageKind::join_request: return "join-request";
    case MessageKind::tree_broadcast: return "tree-broadcast";
    case MessageKind::leave_notice: return "leave-notice";
    case MessageKind::merge_offer: return "merge-offer";
    case MessageKind::partition_notice: return "partition-notice";
  }
  return "unknown";
}

Message make_join_request(const std::string& sender, const GroupElement& bk) {
  Message m;
  m.kind = MessageKind::join_request;
  m.sender = sender;
  m.name = sender;
  m.blinded_key = bk;
  return m;
}

Message make_tree_broadcast(const std::string& sender, Bytes tree, std::uint64_t epoch) {
  Message m;
  m.kind = MessageKind::tree_broadcast;
  m.sender = sender;
  m.tree = std::move(tree);
  m.epoch = epoch;
  m.sponsor = sender;
  return m;
}

Message make_leave_notice(const std::string& sender, const std::string& leaving) {
  Message m;
  m.kind = MessageKind::leave_notice;
  m.sender = sender;
  m.name = leaving;
  return m;
}

Message make_merge_offer(const std::string& sender, Bytes tree) {
  Message m;
  m.kind = MessageKind::merge_offer;
  m.sender = sender;
  m.tree = std::move(tree);
  return m;
}

Message make_partition_notice(const std::string& sender, std::vector<std::string> survivors) {
  Message m;
  m.kind = MessageKind::partition_notice;
  m.sender = sender;
  m.survivors = std::move(survivors);
  return m;
}

Bytes signed_bytes(const Message& msg) {
  ByteWriter w;
  write_body(w, msg);
  return std::move(w).take();
}

Bytes encode(const Message& msg) {
  ByteWriter w;
  write_body(w, msg);
  w.lp16(msg.signature);
  return std::move(w).take();
}

Message decode(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  Message m;
  const std::uint8_t tag = r.u8();
  if (tag < 1 || tag > 5) throw Error(ErrorCode::malformed_encoding, "unknown message kind");
  m.kind = static_cast<MessageKind>(tag);
  m.sender = r.lp16_string();
  switch (m.kind) {
    case MessageKind::join_request:
      m.name = r.lp16_string();
      m.blinded_key = GroupElement(decode_integer(r.lp16()));
      break;
    case MessageKind::tree_broadcast: {
      auto tree = r.raw(r.u32());
      m.tree.assign(tree.begin(), tree.end());
      m.epoch = r.u64();
      m.sponsor = r.lp16_string();
      break;
    }
    case MessageKind::leave_notice:
      m.name = r.lp16_string();
      break;
    case MessageKind::merge_offer: {
      auto tree = r.raw(r.u32());
      m.tree.assign(tree.begin(), tree.end());
      break;
    }
    case MessageKind::partition_notice: {
      const std::uint16_t n = r.u16();
      for (std::uint16_t i = 0; i < n; ++i) m.survivors.push_back(r.lp16_string());
      break;
    }
  }
  auto sig = r.lp16();
  m.signature.assign(sig.begin(), sig.end());
  r.expect_done();
  return m;
}

}  // namespace tgdh
