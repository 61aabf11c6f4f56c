#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tgdh/group_math.hpp"
#include "tgdh/wire.hpp"

namespace tgdh {

inline constexpr std::uint32_t kMaxTreeLevel = 32;

/// <l,v> addressing. Ordering is (level, index), i.e. breadth-first.
struct NodeId {
  std::uint32_t level = 0;
  std::uint64_t index = 0;

  NodeId parent() const { return {level - 1, index / 2}; }
  NodeId left() const { return {level + 1, index * 2}; }
  NodeId right() const { return {level + 1, index * 2 + 1}; }
  NodeId sibling() const { return {level, index ^ 1}; }
  bool is_root() const { return level == 0; }
  bool is_right_child() const { return (index & 1) != 0; }
  /// True when `other` lies in the subtree rooted here (including itself).
  bool is_ancestor_of(const NodeId& other) const;

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

std::string to_string(const NodeId& id);

struct TreeNode {
  NodeId id;
  std::optional<GroupElement> blinded_key;
  std::optional<std::string> member;  // set iff leaf

  bool is_leaf() const { return member.has_value(); }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class KeyTree {
 public:
  /// Single leaf at the root, epoch 0.
  static KeyTree singleton(const std::string& member, std::optional<GroupElement> bk);

  std::uint64_t epoch() const { return epoch_; }
  void set_epoch(std::uint64_t epoch) { epoch_ = epoch; }

  const std::map<NodeId, TreeNode>& nodes() const { return nodes_; }
  bool contains(const NodeId& id) const { return nodes_.count(id) != 0; }
  const TreeNode& node(const NodeId& id) const;
  const std::optional<GroupElement>& blinded_key(const NodeId& id) const {
    return node(id).blinded_key;
  }
  void set_blinded_key(const NodeId& id, std::optional<GroupElement> bk);

  std::optional<NodeId> find_leaf(const std::string& member) const;
  bool has_member(const std::string& member) const { return find_leaf(member).has_value(); }
  /// Leaf names left to right.
  std::vector<std::string> members() const;
  std::size_t member_count() const;
  std::uint32_t height() const;

  NodeId rightmost_leaf(NodeId from) const;
  NodeId leftmost_leaf(NodeId from) const;
  const std::string& rightmost_member(NodeId from) const { return *node(rightmost_leaf(from)).member; }
  const std::string& leftmost_member(NodeId from) const { return *node(leftmost_leaf(from)).member; }

  /// Leaf-to-root node ids for `member`.
  std::vector<NodeId> path(const std::string& member) const;

  /// Structural copy of the subtree at `from`, relabeled to sit at `to`.
  KeyTree relabeled_subtree(NodeId from, NodeId to) const;

  /// Same shape and member placement, blinded keys ignored.
  bool same_shape(const KeyTree& other) const;

  friend bool operator==(const KeyTree&, const KeyTree&) = default;

  // Raw construction, used by the tree operations and the decoder. Callers must
  // restore the full-binary-tree invariant before handing the tree out.
  void put(TreeNode node);
  void erase(const NodeId& id) { nodes_.erase(id); }

 private:
  std::map<NodeId, TreeNode> nodes_;
  std::uint64_t epoch_ = 0;
};

/// Empty when the tree is a valid full binary tree with distinct member names.
std::optional<std::string> check_invariants(const KeyTree& tree);

/// Exponentiations a sponsor at `depth` spends recomputing its path.
inline std::uint64_t sponsor_cost(std::uint32_t depth) { return depth == 0 ? 1 : 2ull * depth; }
/// Every blinded key is a canonical element of the group.
bool elements_in_group(const GroupParams& params, const KeyTree& tree);

KeyTree new_tree(const std::string& member, const GroupElement& bk);

/// Shallowest leaf (smallest index on ties), or the root when the tree is complete.
NodeId insertion_point(const KeyTree& tree);

struct TreeChange {
  KeyTree tree;
  std::string sponsor;
};

/// Sponsor of the next join: rightmost leaf under the insertion point.
std::string join_sponsor(const KeyTree& tree);

TreeChange apply_join(const KeyTree& tree, const std::string& new_member, const GroupElement& bk);

/// Inserts every joiner at one insertion point as a left-leaning chain
/// (((D, n1), n2) ... nk) so the displaced subtree's rightmost leaf can compute
/// every new node alone.
TreeChange apply_batch_join(const KeyTree& tree,
                            const std::vector<std::pair<std::string, GroupElement>>& joiners);

TreeChange apply_leave(const KeyTree& tree, const std::string& leaving);

struct PartitionChange {
  KeyTree tree;
  /// Deepest first: for each stale non-root node, the rightmost leaf beneath
  /// it; the root's when only the root went stale. Duplicates removed.
  std::vector<std::string> sponsors;
};

PartitionChange apply_partition(const KeyTree& tree, const std::set<std::string>& survivors);

/// Attaches the shorter tree (tree_b on ties) beside the taller under a new root.
TreeChange apply_merge(const KeyTree& tree_a, const KeyTree& tree_b);

struct PathEntry {
  NodeId id;
  Exponent secret;
  std::optional<GroupElement> blinded;  // absent for the root
  std::optional<GroupElement> joint;    // child key before folding; absent for the leaf
};

struct KeyPath {
  std::vector<PathEntry> entries;  // leaf first
  GroupElement root;
};

/// Full sponsor recomputation from the leaf up. Writes the fresh blinded keys
/// of every non-root path node into `tree`. Costs 2 exponentiations per level
/// (1 for a singleton).
KeyPath recompute_keypath(const GroupParams& params, KeyTree& tree, const std::string& leaf,
                          const Exponent& leaf_secret, ExpCounter& counter);

Bytes serialize(const KeyTree& tree);
/// Throws malformed_encoding on truncation, bad header, non-canonical order,
/// duplicate ids or any structural invariant violation.
KeyTree deserialize(std::span<const std::uint8_t> bytes);

}  // namespace tgdh
