#include "tgdh/member.hpp"

#include <algorithm>
#include <set>
#include <tuple>

namespace tgdh {
namespace {

int kind_rank(MessageKind kind) {
  switch (kind) {
    case MessageKind::leave_notice: return 0;
    case MessageKind::partition_notice: return 1;
    case MessageKind::merge_offer: return 2;
    case MessageKind::join_request: return 3;
    case MessageKind::tree_broadcast: return 4;
  }
  return 5;
}

void canonical_order(std::vector<Message>& batch) {
  std::vector<std::pair<Bytes, Message>> keyed;
  keyed.reserve(batch.size());
  for (auto& m : batch) keyed.emplace_back(encode(m), std::move(m));
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    return std::forward_as_tuple(kind_rank(a.second.kind), a.second.sender, a.first) <
           std::forward_as_tuple(kind_rank(b.second.kind), b.second.sender, b.first);
  });
  batch.clear();
  for (auto& [bytes, m] : keyed) batch.push_back(std::move(m));
}

KeyTree parse_tree(const GroupParams& params, const Bytes& bytes) {
  KeyTree tree = deserialize(bytes);
  if (!elements_in_group(params, tree)) {
    throw Error(ErrorCode::malformed_encoding, "blinded key outside the group");
  }
  return tree;
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::idle: return "idle";
    case Role::sponsor_pending: return "sponsor-pending";
    case Role::awaiting_broadcast: return "awaiting-broadcast";
  }
  return "unknown";
}

Member::Member(std::string name, const GroupParams& params, std::shared_ptr<Signer> signer,
               std::uint64_t seed)
    : name_(std::move(name)),
      params_(&params),
      signer_(std::move(signer)),
      rng_(seed),
      leaf_secret_(random_exponent(params, rng_)),
      leaf_bk_(blind(params, leaf_secret_, counters_.exponentiations)) {
  if (name_.empty() || name_.size() > 0xFFFF) {
    throw Error(ErrorCode::invalid_argument, "member names must be 1..65535 bytes");
  }
  if (!signer_) throw Error(ErrorCode::invalid_argument, "member needs a signer");
}

void Member::found_group() {
  forget_group();
  tree_ = new_tree(name_, leaf_bk_);
  cache_ = {Level{leaf_secret_, std::nullopt, std::nullopt}};
  root_ = leaf_bk_;
  group_key_ = derive_group_key(*params_, *root_, 0);
}

std::vector<Exponent> Member::secrets() const {
  std::vector<Exponent> out{leaf_secret_};
  for (const auto& level : cache_) out.push_back(level.secret);
  return out;
}

Message Member::sign(Message msg) {
  msg.signature = signer_->sign(name_, signed_bytes(msg));
  if (!is_control(msg.kind)) ++counters_.signatures;
  return msg;
}

bool Member::verify(const Message& msg) {
  if (!is_control(msg.kind)) ++counters_.verifications;
  return signer_->verify(msg.sender, signed_bytes(msg), msg.signature);
}

Message Member::initiate_join() {
  if (tree_) throw Error(ErrorCode::invalid_state, name_ + " is already in a group");
  joining_ = true;
  return sign(make_join_request(name_, leaf_bk_));
}

Message Member::offer_for_join() {
  if (!tree_) throw Error(ErrorCode::not_a_member, name_ + " has no group");
  return sign(make_merge_offer(name_, serialize(*tree_)));
}

Message Member::offer_merge() {
  if (!tree_ || !root_) throw Error(ErrorCode::invalid_state, name_ + " has no settled group");
  KeyTree offered = *tree_;
  if (!offered.node({0, 0}).is_leaf()) {
    const std::size_t top = tree_->path(name_).size() - 1;
    offered.set_blinded_key({0, 0}, blind(*params_, cache_.at(top).secret,
                                          counters_.exponentiations));
  }
  return sign(make_merge_offer(name_, serialize(offered)));
}

Message Member::initiate_leave() {
  if (!tree_) throw Error(ErrorCode::not_a_member, name_ + " has no group");
  return sign(make_leave_notice(name_, name_));
}

Message Member::announce_partition(std::vector<std::string> survivors) {
  if (!tree_) throw Error(ErrorCode::not_a_member, name_ + " has no group");
  if (std::find(survivors.begin(), survivors.end(), name_) == survivors.end()) {
    throw Error(ErrorCode::invalid_argument, name_ + " must be among the survivors it announces");
  }
  std::sort(survivors.begin(), survivors.end());
  return sign(make_partition_notice(name_, std::move(survivors)));
}

std::optional<ErrorCode> Member::receive(const Message& msg) {
  try {
    if (!verify(msg)) return ErrorCode::bad_signature;
  } catch (const Error& e) {
    return e.code();
  }
  if (msg.kind == MessageKind::tree_broadcast && tree_ && msg.epoch < tree_->epoch()) {
    return ErrorCode::stale_epoch;
  }
  inbox_.push_back(msg);
  return std::nullopt;
}

std::vector<Message> Member::flush() {
  std::vector<Message> out;
  process(std::exchange(inbox_, {}), out);
  while (!op_ && !deferred_.empty()) {
    std::vector<Message> again(std::make_move_iterator(deferred_.begin()),
                               std::make_move_iterator(deferred_.end()));
    deferred_.clear();
    process(std::move(again), out);
  }
  return out;
}

std::vector<Message> Member::handle(const Message& msg) {
  if (auto code = receive(msg)) {
    throw Error(*code, std::string(to_string(*code)) + " from " + msg.sender);
  }
  auto out = flush();
  auto errors = take_errors();
  if (!errors.empty()) throw errors.front();
  return out;
}

std::vector<Error> Member::take_errors() { return std::exchange(errors_, {}); }

void Member::fail(ErrorCode code, const std::string& what) { errors_.emplace_back(code, what); }

void Member::process(std::vector<Message> batch, std::vector<Message>& out) {
  canonical_order(batch);
  std::vector<Message> controls, offers, requests, broadcasts;
  for (auto& m : batch) {
    switch (m.kind) {
      case MessageKind::leave_notice:
      case MessageKind::partition_notice: controls.push_back(std::move(m)); break;
      case MessageKind::merge_offer: offers.push_back(std::move(m)); break;
      case MessageKind::join_request: requests.push_back(std::move(m)); break;
      case MessageKind::tree_broadcast: broadcasts.push_back(std::move(m)); break;
    }
  }

  auto defer = [&](const Message& m) {
    if (deferred_.size() >= kMaxDeferred) {
      fail(ErrorCode::protocol_overload, "deferred queue full, dropped message from " + m.sender);
      return;
    }
    deferred_.push_back(m);
  };
  // A joiner's own join is the operation it is waiting for.
  auto occupied = [&] { return op_.has_value(); };

  for (const auto& notice : controls) {
    if (occupied()) {
      defer(notice);
      continue;
    }
    try {
      if (notice.kind == MessageKind::leave_notice) {
        on_leave(notice, out);
      } else {
        on_partition(notice, out);
      }
    } catch (const Error& e) {
      fail(e.code(), e.what());
    }
  }
  if (!requests.empty() || !offers.empty()) {
    if (occupied()) {
      for (const auto& m : offers) defer(m);
      for (const auto& m : requests) defer(m);
    } else {
      try {
        if (!requests.empty()) {
          on_joins(requests, offers, out);
        } else {
          on_merge(offers, out);
        }
      } catch (const Error& e) {
        fail(e.code(), e.what());
      }
    }
  }
  for (const auto& m : broadcasts) {
    try {
      on_broadcast(m);
    } catch (const Error& e) {
      fail(e.code(), e.what());
    }
  }
  if (op_ && op_->kind == OpKind::partition && tree_ && partition_should_act()) {
    try {
      partition_act(false, out);
    } catch (const Error& e) {
      fail(e.code(), e.what());
    }
  }
  try_finish();
}

void Member::begin(OpKind kind, std::uint64_t target) {
  op_ = Op{kind, target, std::nullopt, false};
  root_.reset();
  role_ = Role::awaiting_broadcast;
}

void Member::on_joins(const std::vector<Message>& requests, const std::vector<Message>& offers,
                      std::vector<Message>& out) {
  std::vector<std::pair<std::string, GroupElement>> joiners;
  for (const auto& r : requests) {
    if (r.name != r.sender || !r.blinded_key || !is_valid_element(*params_, r.blinded_key->value())) {
      throw Error(ErrorCode::malformed_encoding, "bad join request from " + r.sender);
    }
    joiners.emplace_back(r.name, *r.blinded_key);
  }
  std::sort(joiners.begin(), joiners.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  if (joining_) {
    if (offers.size() != 1) {
      throw Error(ErrorCode::invalid_state, name_ + " expected exactly one group offer");
    }
    const KeyTree group = parse_tree(*params_, offers.front().tree);
    auto change = apply_batch_join(group, joiners);
    if (!change.tree.has_member(name_)) {
      throw Error(ErrorCode::not_a_member, name_ + " is not among the joiners");
    }
    begin(OpKind::join, group.epoch() + 1);
    op_->expected = std::move(change.tree);
    return;
  }
  if (!tree_) throw Error(ErrorCode::invalid_state, name_ + " has no group to join");
  auto change = apply_batch_join(*tree_, joiners);
  const std::uint64_t target = tree_->epoch() + 1;
  tree_ = std::move(change.tree);
  begin(OpKind::join, target);
  if (change.sponsor == name_) sponsor_rekey(out);
}

void Member::on_merge(const std::vector<Message>& offers, std::vector<Message>& out) {
  if (offers.size() != 2) {
    throw Error(ErrorCode::invalid_state, "merge needs exactly two offers");
  }
  KeyTree a = parse_tree(*params_, offers[0].tree);
  KeyTree b = parse_tree(*params_, offers[1].tree);
  if (!a.has_member(name_) && !b.has_member(name_)) {
    throw Error(ErrorCode::not_a_member, name_ + " is in neither merging group");
  }
  // Taller tree keeps sponsorship; on equal heights the group whose oldest
  // (leftmost) member sorts first yields.
  bool a_wins;
  if (a.height() != b.height()) {
    a_wins = a.height() > b.height();
  } else {
    a_wins = b.leftmost_member({0, 0}) < a.leftmost_member({0, 0});
  }
  auto change = a_wins ? apply_merge(a, b) : apply_merge(b, a);
  const std::uint64_t target = std::max(a.epoch(), b.epoch()) + 1;
  tree_ = std::move(change.tree);
  begin(OpKind::merge, target);
  if (change.sponsor == name_) sponsor_rekey(out);
}

void Member::on_leave(const Message& notice, std::vector<Message>& out) {
  if (notice.name != notice.sender) {
    throw Error(ErrorCode::malformed_encoding, "leave notice for another member");
  }
  if (notice.name == name_) {
    forget_group();
    return;
  }
  if (!tree_) throw Error(ErrorCode::not_a_member, name_ + " has no group");
  auto change = apply_leave(*tree_, notice.name);
  const std::uint64_t target = tree_->epoch() + 1;
  tree_ = std::move(change.tree);
  begin(OpKind::leave, target);
  if (change.sponsor == name_) sponsor_rekey(out);
}

void Member::on_partition(const Message& notice, std::vector<Message>& out) {
  if (!tree_) throw Error(ErrorCode::not_a_member, name_ + " has no group");
  std::set<std::string> survivors(notice.survivors.begin(), notice.survivors.end());
  if (!survivors.count(name_)) {
    throw Error(ErrorCode::not_a_member, name_ + " is not a survivor");
  }
  if (!survivors.count(notice.sender)) {
    throw Error(ErrorCode::invalid_argument, "partition notice from outside the cell");
  }
  if (survivors.size() == tree_->member_count()) return;
  auto change = apply_partition(*tree_, survivors);
  const std::uint64_t target = tree_->epoch() + 1;
  tree_ = std::move(change.tree);
  begin(OpKind::partition, target);
  if (std::find(change.sponsors.begin(), change.sponsors.end(), name_) != change.sponsors.end()) {
    role_ = Role::sponsor_pending;
  }
  bool stale_below_root = false;
  for (const auto& [id, node] : tree_->nodes()) {
    if (!id.is_root() && !node.blinded_key) stale_below_root = true;
  }
  const bool root_only = !stale_below_root && tree_->rightmost_member({0, 0}) == name_;
  if (root_only || partition_should_act()) partition_act(true, out);
}

bool Member::partition_should_act() const {
  const auto ids = tree_->path(name_);
  for (std::size_t j = 1; j + 1 < ids.size(); ++j) {
    if (tree_->blinded_key(ids[j])) continue;
    // ids[j] is the lowest missing node: act only as its rightmost leaf and
    // only once every sibling key below it has arrived.
    if (tree_->rightmost_member(ids[j]) != name_) return false;
    for (std::size_t i = 0; i < j; ++i) {
      if (!tree_->blinded_key(ids[i].sibling())) return false;
    }
    return true;
  }
  return false;
}

void Member::partition_act(bool refresh, std::vector<Message>& out) {
  const std::uint64_t before = counters_.exponentiations.count;
  if (refresh) {
    leaf_secret_ = random_exponent(*params_, rng_);
    cache_.clear();
  }
  advance(refresh, true);
  counters_.sponsor_exponentiations += counters_.exponentiations.count - before;
  tree_->set_epoch(op_->target_epoch);
  out.push_back(sign(make_tree_broadcast(name_, serialize(*tree_), op_->target_epoch)));
  ++counters_.broadcasts;
  op_->acted = true;
  role_ = Role::awaiting_broadcast;
}

void Member::sponsor_rekey(std::vector<Message>& out) {
  role_ = Role::sponsor_pending;
  const std::uint64_t before = counters_.exponentiations.count;
  leaf_secret_ = random_exponent(*params_, rng_);
  const KeyPath path =
      recompute_keypath(*params_, *tree_, name_, leaf_secret_, counters_.exponentiations);
  counters_.sponsor_exponentiations += counters_.exponentiations.count - before;
  load_cache(path);
  tree_->set_epoch(op_->target_epoch);
  out.push_back(sign(make_tree_broadcast(name_, serialize(*tree_), op_->target_epoch)));
  ++counters_.broadcasts;
  op_->acted = true;
  role_ = Role::awaiting_broadcast;
}

void Member::load_cache(const KeyPath& path) {
  cache_.clear();
  leaf_bk_ = *tree_->blinded_key(path.entries.front().id);
  for (std::size_t i = 0; i < path.entries.size(); ++i) {
    Level level{path.entries[i].secret, path.entries[i].joint, std::nullopt};
    if (i > 0) level.sibling_used = tree_->blinded_key(path.entries[i - 1].id.sibling());
    cache_.push_back(std::move(level));
  }
  root_ = path.root;
}

std::size_t Member::advance(bool publish_all, bool publish_missing) {
  const auto ids = tree_->path(name_);
  if (cache_.empty() || !(cache_.front().secret == leaf_secret_)) {
    cache_ = {Level{leaf_secret_, std::nullopt, std::nullopt}};
  }
  if (publish_all) {
    leaf_bk_ = blind(*params_, leaf_secret_, counters_.exponentiations);
    tree_->set_blinded_key(ids.front(), leaf_bk_);
  }
  // Levels above the current root belong to an older, taller tree.
  if (cache_.size() > ids.size()) {
    cache_.erase(cache_.begin() + static_cast<std::ptrdiff_t>(ids.size()), cache_.end());
  }
  std::size_t reached = 0;
  for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
    const auto& sibling = tree_->blinded_key(ids[i].sibling());
    if (!sibling) break;
    const bool reusable = cache_.size() > i + 1 && cache_[i + 1].joint &&
                          cache_[i + 1].sibling_used == sibling;
    if (!reusable) {
      GroupElement joint = dh(*params_, cache_[i].secret, *sibling, counters_.exponentiations);
      cache_.erase(cache_.begin() + static_cast<std::ptrdiff_t>(i + 1), cache_.end());
      cache_.push_back(Level{element_to_exponent(*params_, joint), joint, *sibling});
    }
    reached = i + 1;
    const NodeId up = ids[i + 1];
    if (!up.is_root() && (publish_all || (publish_missing && !tree_->blinded_key(up)))) {
      tree_->set_blinded_key(up, blind(*params_, cache_[i + 1].secret,
                                       counters_.exponentiations));
    }
  }
  if (reached + 1 == ids.size()) {
    root_ = ids.size() == 1 ? *tree_->blinded_key(ids.front()) : *cache_[reached].joint;
  } else {
    root_.reset();
  }
  return reached;
}

void Member::on_broadcast(const Message& msg) {
  KeyTree incoming = parse_tree(*params_, msg.tree);
  if (incoming.epoch() != msg.epoch || msg.sponsor != msg.sender ||
      !incoming.has_member(msg.sender)) {
    throw Error(ErrorCode::malformed_encoding, "inconsistent tree broadcast from " + msg.sender);
  }
  if (!incoming.has_member(name_)) {
    const bool had_group = tree_.has_value();
    forget_group();
    throw Error(ErrorCode::not_a_member,
                name_ + (had_group ? " was removed from the group" : " is not in the broadcast"));
  }
  if (joining_) {
    if (!op_ || !op_->expected) {
      throw Error(ErrorCode::invalid_state, name_ + " got a tree before its join was answered");
    }
    if (!incoming.same_shape(*op_->expected) || incoming.epoch() != op_->target_epoch) {
      throw Error(ErrorCode::invalid_state, "broadcast does not match the announced join");
    }
    tree_ = std::move(incoming);
    joining_ = false;
    op_->expected.reset();
  } else {
    if (!tree_) throw Error(ErrorCode::invalid_state, name_ + " has no group");
    if (incoming.epoch() < tree_->epoch()) {
      throw Error(ErrorCode::stale_epoch, "broadcast epoch behind local tree");
    }
    if (!tree_->same_shape(incoming)) {
      throw Error(ErrorCode::invalid_state, "broadcast tree shape differs from local tree");
    }
    // The sender's own path is authoritative; anything else only fills gaps,
    // so the result does not depend on delivery order.
    std::set<NodeId> sender_path;
    for (const auto& id : incoming.path(msg.sender)) sender_path.insert(id);
    for (const auto& [id, node] : incoming.nodes()) {
      if (!node.blinded_key) continue;
      if (sender_path.count(id) || !tree_->blinded_key(id)) {
        tree_->set_blinded_key(id, node.blinded_key);
      }
    }
    tree_->set_epoch(incoming.epoch());
  }
  advance(false, false);
}

void Member::try_finish() {
  if (!tree_ || joining_) return;
  if (group_key_ && group_key_->epoch != tree_->epoch()) group_key_.reset();
  if (!root_) return;
  if (op_ && tree_->epoch() != op_->target_epoch) return;
  group_key_ = derive_group_key(*params_, *root_, tree_->epoch());
  op_.reset();
  role_ = Role::idle;
}

void Member::forget_group() {
  tree_.reset();
  cache_.clear();
  root_.reset();
  group_key_.reset();
  op_.reset();
  role_ = Role::idle;
  joining_ = false;
}

std::uint64_t Member::recompute_full_path() {
  if (!tree_ || !root_) throw Error(ErrorCode::invalid_state, name_ + " has no settled group");
  KeyTree scratch = *tree_;
  ExpCounter spent;
  const KeyPath path = recompute_keypath(*params_, scratch, name_, leaf_secret_, spent);
  counters_.exponentiations.count += spent.count;
  if (!(path.root == *root_)) {
    throw Error(ErrorCode::invalid_state, name_ + " recomputed a different root");
  }
  return spent.count;
}

}  // namespace tgdh
