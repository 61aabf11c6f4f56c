#include "tgdh/keytree.hpp"

#include <algorithm>
#include <functional>

#include "tgdh/error.hpp"

namespace tgdh {
namespace {

constexpr std::uint8_t kFlagBlinded = 0x01;
constexpr std::uint8_t kFlagLeaf = 0x02;
constexpr std::uint8_t kVersion = 0x01;

void check_name(const std::string& name) {
  if (name.empty() || name.size() > 0xFFFF) {
    throw Error(ErrorCode::invalid_argument, "member names must be 1..65535 bytes");
  }
}

void clear_ancestors(KeyTree& tree, NodeId id) {
  while (!id.is_root()) {
    id = id.parent();
    tree.set_blinded_key(id, std::nullopt);
  }
}

void clear_internal_root_key(KeyTree& tree) {
  if (!tree.node({0, 0}).is_leaf()) tree.set_blinded_key({0, 0}, std::nullopt);
}

void graft(KeyTree& into, const KeyTree& subtree) {
  for (const auto& [id, node] : subtree.nodes()) into.put(node);
}

void erase_subtree(KeyTree& tree, const NodeId& at) {
  std::vector<NodeId> doomed;
  for (const auto& [id, node] : tree.nodes()) {
    if (at.is_ancestor_of(id)) doomed.push_back(id);
  }
  for (const auto& id : doomed) tree.erase(id);
}

}  // namespace

bool NodeId::is_ancestor_of(const NodeId& other) const {
  if (other.level < level) return false;
  return (other.index >> (other.level - level)) == index;
}

std::string to_string(const NodeId& id) {
  return "<" + std::to_string(id.level) + "," + std::to_string(id.index) + ">";
}

KeyTree KeyTree::singleton(const std::string& member, std::optional<GroupElement> bk) {
  check_name(member);
  KeyTree tree;
  tree.put(TreeNode{{0, 0}, std::move(bk), member});
  return tree;
}

const TreeNode& KeyTree::node(const NodeId& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) {
    throw Error(ErrorCode::invalid_argument, "no node " + to_string(id));
  }
  return it->second;
}

void KeyTree::set_blinded_key(const NodeId& id, std::optional<GroupElement> bk) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) {
    throw Error(ErrorCode::invalid_argument, "no node " + to_string(id));
  }
  it->second.blinded_key = std::move(bk);
}

void KeyTree::put(TreeNode node) {
  if (node.id.level > kMaxTreeLevel) {
    throw Error(ErrorCode::tree_too_deep, "node " + to_string(node.id) + " below level 32");
  }
  auto id = node.id;
  nodes_.insert_or_assign(id, std::move(node));
}

std::optional<NodeId> KeyTree::find_leaf(const std::string& member) const {
  for (const auto& [id, node] : nodes_) {
    if (node.member && *node.member == member) return id;
  }
  return std::nullopt;
}

std::vector<std::string> KeyTree::members() const {
  std::vector<std::string> out;
  std::function<void(NodeId)> walk = [&](NodeId id) {
    const auto& n = node(id);
    if (n.is_leaf()) {
      out.push_back(*n.member);
      return;
    }
    walk(id.left());
    walk(id.right());
  };
  if (!nodes_.empty()) walk({0, 0});
  return out;
}

std::size_t KeyTree::member_count() const {
  return static_cast<std::size_t>(std::count_if(
      nodes_.begin(), nodes_.end(), [](const auto& kv) { return kv.second.is_leaf(); }));
}

std::uint32_t KeyTree::height() const {
  return nodes_.empty() ? 0 : nodes_.rbegin()->first.level;
}

NodeId KeyTree::rightmost_leaf(NodeId from) const {
  while (!node(from).is_leaf()) from = from.right();
  return from;
}

NodeId KeyTree::leftmost_leaf(NodeId from) const {
  while (!node(from).is_leaf()) from = from.left();
  return from;
}

std::vector<NodeId> KeyTree::path(const std::string& member) const {
  auto leaf = find_leaf(member);
  if (!leaf) throw Error(ErrorCode::unknown_member, "no member " + member);
  std::vector<NodeId> out{*leaf};
  while (!out.back().is_root()) out.push_back(out.back().parent());
  return out;
}

KeyTree KeyTree::relabeled_subtree(NodeId from, NodeId to) const {
  KeyTree out;
  out.epoch_ = epoch_;
  for (const auto& [id, n] : nodes_) {
    if (!from.is_ancestor_of(id)) continue;
    const std::uint32_t depth = id.level - from.level;
    const std::uint64_t offset = id.index - (from.index << depth);
    TreeNode moved = n;
    moved.id = NodeId{to.level + depth, (to.index << depth) + offset};
    out.put(std::move(moved));
  }
  return out;
}

bool KeyTree::same_shape(const KeyTree& other) const {
  if (nodes_.size() != other.nodes_.size()) return false;
  return std::equal(nodes_.begin(), nodes_.end(), other.nodes_.begin(),
                    [](const auto& a, const auto& b) {
                      return a.first == b.first && a.second.member == b.second.member;
                    });
}

std::optional<std::string> check_invariants(const KeyTree& tree) {
  const auto& nodes = tree.nodes();
  if (nodes.empty()) return "empty tree";
  if (!tree.contains({0, 0})) return "missing root";
  std::set<std::string> names;
  for (const auto& [id, n] : nodes) {
    if (!(n.id == id)) return "node id mismatch at " + to_string(id);
    if (id.level > kMaxTreeLevel) return "node below level 32";
    if (id.level < 64 && id.index >= (std::uint64_t{1} << id.level)) {
      return "index out of range at " + to_string(id);
    }
    if (!id.is_root() && !tree.contains(id.parent())) {
      return "orphan node " + to_string(id);
    }
    const bool has_left = tree.contains(id.left());
    const bool has_right = tree.contains(id.right());
    if (n.is_leaf()) {
      if (has_left || has_right) return "leaf with children at " + to_string(id);
      if (n.member->empty()) return "empty member name";
      if (!names.insert(*n.member).second) return "duplicate member " + *n.member;
    } else if (!has_left || !has_right) {
      return "internal node without two children at " + to_string(id);
    }
  }
  return std::nullopt;
}

bool elements_in_group(const GroupParams& params, const KeyTree& tree) {
  for (const auto& [id, n] : tree.nodes()) {
    if (n.blinded_key && !is_valid_element(params, n.blinded_key->value())) return false;
  }
  return true;
}

KeyTree new_tree(const std::string& member, const GroupElement& bk) {
  return KeyTree::singleton(member, bk);
}

NodeId insertion_point(const KeyTree& tree) {
  std::optional<NodeId> best;
  std::size_t leaves = 0;
  for (const auto& [id, n] : tree.nodes()) {
    if (!n.is_leaf()) continue;
    ++leaves;
    // Map order is (level, index), so the first leaf is shallowest-leftmost.
    if (!best) best = id;
  }
  const std::uint32_t h = tree.height();
  const bool complete = h < 63 && leaves == (std::size_t{1} << h);
  return complete ? NodeId{0, 0} : *best;
}

std::string join_sponsor(const KeyTree& tree) {
  return tree.rightmost_member(insertion_point(tree));
}

TreeChange apply_join(const KeyTree& tree, const std::string& new_member, const GroupElement& bk) {
  return apply_batch_join(tree, {{new_member, bk}});
}

TreeChange apply_batch_join(const KeyTree& tree,
                            const std::vector<std::pair<std::string, GroupElement>>& joiners) {
  if (joiners.empty()) throw Error(ErrorCode::invalid_argument, "no joiners");
  std::set<std::string> seen;
  for (const auto& [name, bk] : joiners) {
    check_name(name);
    if (tree.has_member(name) || !seen.insert(name).second) {
      throw Error(ErrorCode::duplicate_member, "member " + name + " already present");
    }
  }
  const NodeId at = insertion_point(tree);
  const std::size_t k = joiners.size();
  if (tree.height() + k > kMaxTreeLevel) {
    throw Error(ErrorCode::tree_too_deep, "join would exceed level 32");
  }

  NodeId bottom = at;
  for (std::size_t i = 0; i < k; ++i) bottom = bottom.left();

  KeyTree out = tree;
  erase_subtree(out, at);
  graft(out, tree.relabeled_subtree(at, bottom));
  // Chain upwards: joiner j sits right of the node holding everything before it.
  NodeId inner = bottom;
  for (const auto& [name, bk] : joiners) {
    const NodeId parent = inner.parent();
    out.put(TreeNode{parent.right(), bk, name});
    out.put(TreeNode{parent, std::nullopt, std::nullopt});
    inner = parent;
  }
  clear_ancestors(out, at);
  return {std::move(out), tree.rightmost_member(at)};
}

TreeChange apply_leave(const KeyTree& tree, const std::string& leaving) {
  const auto leaf = tree.find_leaf(leaving);
  if (!leaf) throw Error(ErrorCode::unknown_member, "no member " + leaving);
  if (leaf->is_root()) {
    throw Error(ErrorCode::last_member, "the last member cannot leave; the group dissolves");
  }
  const NodeId parent = leaf->parent();
  KeyTree promoted = tree.relabeled_subtree(leaf->sibling(), parent);
  KeyTree out = tree;
  erase_subtree(out, parent);
  graft(out, promoted);
  clear_ancestors(out, parent);
  clear_internal_root_key(out);
  std::string sponsor = out.rightmost_member(parent);
  return {std::move(out), std::move(sponsor)};
}

PartitionChange apply_partition(const KeyTree& tree, const std::set<std::string>& survivors) {
  if (survivors.empty()) throw Error(ErrorCode::empty_survivor_set, "no survivors");
  for (const auto& name : survivors) {
    if (!tree.has_member(name)) throw Error(ErrorCode::unknown_member, "no member " + name);
  }

  // Surviving and removed leaf counts per source subtree.
  std::map<NodeId, std::pair<std::size_t, std::size_t>> counts;
  for (auto it = tree.nodes().rbegin(); it != tree.nodes().rend(); ++it) {
    const auto& [id, n] = *it;
    if (n.is_leaf()) {
      const bool keep = survivors.count(*n.member) != 0;
      counts[id] = {keep ? 1 : 0, keep ? 0 : 1};
    } else {
      const auto& l = counts.at(id.left());
      const auto& r = counts.at(id.right());
      counts[id] = {l.first + r.first, l.second + r.second};
    }
  }

  KeyTree out;
  out.set_epoch(tree.epoch());
  std::vector<NodeId> stale;
  std::function<void(NodeId, NodeId)> emit = [&](NodeId src, NodeId dst) {
    const auto& n = tree.node(src);
    if (n.is_leaf()) {
      out.put(TreeNode{dst, n.blinded_key, n.member});
      return;
    }
    const bool left_alive = counts.at(src.left()).first > 0;
    const bool right_alive = counts.at(src.right()).first > 0;
    if (left_alive && right_alive) {
      const bool intact = counts.at(src).second == 0;
      out.put(TreeNode{dst, intact ? n.blinded_key : std::nullopt, std::nullopt});
      if (!intact) stale.push_back(dst);
      emit(src.left(), dst.left());
      emit(src.right(), dst.right());
    } else {
      emit(left_alive ? src.left() : src.right(), dst);
    }
  };
  emit({0, 0}, {0, 0});
  clear_internal_root_key(out);

  std::vector<std::string> sponsors;
  if (counts.at({0, 0}).second > 0) {
    std::sort(stale.begin(), stale.end(), [](const NodeId& a, const NodeId& b) {
      return a.level != b.level ? a.level > b.level : a.index < b.index;
    });
    for (const auto& id : stale) {
      if (id.is_root()) continue;
      const auto& name = out.rightmost_member(id);
      if (std::find(sponsors.begin(), sponsors.end(), name) == sponsors.end()) {
        sponsors.push_back(name);
      }
    }
    if (sponsors.empty()) sponsors.push_back(out.rightmost_member({0, 0}));
  }
  return {std::move(out), std::move(sponsors)};
}

TreeChange apply_merge(const KeyTree& tree_a, const KeyTree& tree_b) {
  for (const auto& name : tree_b.members()) {
    if (tree_a.has_member(name)) {
      throw Error(ErrorCode::overlapping_membership, "member " + name + " in both trees");
    }
  }
  const bool b_taller = tree_b.height() > tree_a.height();
  const KeyTree& taller = b_taller ? tree_b : tree_a;
  const KeyTree& shorter = b_taller ? tree_a : tree_b;
  if (taller.height() + 1 > kMaxTreeLevel) {
    throw Error(ErrorCode::tree_too_deep, "merge would exceed level 32");
  }
  KeyTree out;
  out.set_epoch(std::max(tree_a.epoch(), tree_b.epoch()));
  out.put(TreeNode{{0, 0}, std::nullopt, std::nullopt});
  graft(out, taller.relabeled_subtree({0, 0}, {1, 0}));
  graft(out, shorter.relabeled_subtree({0, 0}, {1, 1}));
  std::string sponsor = out.rightmost_member({1, 0});
  return {std::move(out), std::move(sponsor)};
}

KeyPath recompute_keypath(const GroupParams& params, KeyTree& tree, const std::string& leaf,
                          const Exponent& leaf_secret, ExpCounter& counter) {
  const auto ids = tree.path(leaf);
  for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
    if (!tree.blinded_key(ids[i].sibling())) {
      throw Error(ErrorCode::missing_sibling_blinded_key,
                  "sibling of " + to_string(ids[i]) + " has no blinded key");
    }
  }

  GroupElement leaf_bk = blind(params, leaf_secret, counter);
  tree.set_blinded_key(ids[0], leaf_bk);
  if (ids.size() == 1) {
    return KeyPath{{PathEntry{ids[0], leaf_secret, std::nullopt, std::nullopt}}, leaf_bk};
  }

  KeyPath out{{PathEntry{ids[0], leaf_secret, leaf_bk, std::nullopt}}, GroupElement(1)};
  for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
    const GroupElement joint =
        dh(params, out.entries.back().secret, *tree.blinded_key(ids[i].sibling()), counter);
    const NodeId up = ids[i + 1];
    Exponent secret = element_to_exponent(params, joint);
    if (up.is_root()) {
      out.entries.push_back(PathEntry{up, std::move(secret), std::nullopt, joint});
      out.root = joint;
    } else {
      GroupElement bk = blind(params, secret, counter);
      tree.set_blinded_key(up, bk);
      out.entries.push_back(PathEntry{up, std::move(secret), std::move(bk), joint});
    }
  }
  return out;
}

Bytes serialize(const KeyTree& tree) {
  ByteWriter w;
  w.raw(std::span(reinterpret_cast<const std::uint8_t*>("TGDH"), 4));
  w.u8(kVersion);
  w.u64(tree.epoch());
  w.u32(static_cast<std::uint32_t>(tree.nodes().size()));
  for (const auto& [id, n] : tree.nodes()) {
    w.u16(static_cast<std::uint16_t>(id.level));
    w.u32(static_cast<std::uint32_t>(id.index));
    std::uint8_t flags = 0;
    if (n.blinded_key) flags |= kFlagBlinded;
    if (n.is_leaf()) flags |= kFlagLeaf;
    w.u8(flags);
    if (n.blinded_key) w.lp16(encode_integer(n.blinded_key->value()));
    if (n.member) w.lp16(*n.member);
  }
  return std::move(w).take();
}

KeyTree deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), "TGDH")) {
    throw Error(ErrorCode::malformed_encoding, "bad tree magic");
  }
  if (r.u8() != kVersion) throw Error(ErrorCode::malformed_encoding, "unknown tree version");
  KeyTree tree;
  tree.set_epoch(r.u64());
  const std::uint32_t count = r.u32();
  // Each node takes at least 7 bytes; reject absurd counts before looping.
  if (count == 0 || count > r.remaining() / 7) {
    throw Error(ErrorCode::malformed_encoding, "implausible node count");
  }
  std::optional<NodeId> previous;
  for (std::uint32_t i = 0; i < count; ++i) {
    NodeId id;
    id.level = r.u16();
    id.index = r.u32();
    if (id.level > kMaxTreeLevel) throw Error(ErrorCode::malformed_encoding, "node too deep");
    if (previous && !(*previous < id)) {
      throw Error(ErrorCode::malformed_encoding, "nodes not in strict breadth-first order");
    }
    previous = id;
    const std::uint8_t flags = r.u8();
    if ((flags & ~(kFlagBlinded | kFlagLeaf)) != 0) {
      throw Error(ErrorCode::malformed_encoding, "unknown node flags");
    }
    TreeNode n{id, std::nullopt, std::nullopt};
    if (flags & kFlagBlinded) n.blinded_key = GroupElement(decode_integer(r.lp16()));
    if (flags & kFlagLeaf) n.member = r.lp16_string();
    tree.put(std::move(n));
  }
  r.expect_done();
  if (auto problem = check_invariants(tree)) {
    throw Error(ErrorCode::malformed_encoding, *problem);
  }
  return tree;
}

}  // namespace tgdh
