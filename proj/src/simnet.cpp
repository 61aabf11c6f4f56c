#include "tgdh/simnet.hpp"

#include <algorithm>
#include <cstdio>

namespace tgdh {
namespace {

std::uint64_t member_seed(std::uint64_t net_seed, const std::string& name, std::uint64_t nth) {
  ByteWriter w;
  w.u64(net_seed);
  w.lp16(name);
  w.u64(nth);
  const Bytes digest = sha256(w.bytes());
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out = (out << 8) | digest[static_cast<std::size_t>(i)];
  return out;
}

std::string hex_length(std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%zx", n);
  return buf;
}

}  // namespace

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::init: return "init";
    case OpKind::join: return "join";
    case OpKind::batch_join: return "batchjoin";
    case OpKind::leave: return "leave";
    case OpKind::partition: return "partition";
    case OpKind::merge: return "merge";
  }
  return "unknown";
}

SimNetwork::SimNetwork(const GroupParams& params, std::uint64_t seed,
                       std::optional<std::uint64_t> shuffle_seed, std::size_t max_rounds)
    : params_(&params),
      seed_(seed),
      max_rounds_(max_rounds),
      signer_(std::make_shared<HmacSigner>(seed)) {
  if (max_rounds_ == 0) throw Error(ErrorCode::invalid_argument, "max_rounds must be >= 1");
  if (shuffle_seed) shuffle_.emplace(*shuffle_seed);
}

template <typename T>
void SimNetwork::maybe_shuffle(std::vector<T>& items) {
  if (shuffle_) std::shuffle(items.begin(), items.end(), *shuffle_);
}

Member& SimNetwork::spawn(const std::string& name) {
  auto seed = member_seed(seed_, name, spawned_++);
  auto [it, fresh] = members_.try_emplace(name, name, *params_, signer_, seed);
  if (!fresh) throw Error(ErrorCode::duplicate_member, "member " + name + " already present");
  return it->second;
}

std::vector<std::string> SimNetwork::member_names() const {
  std::vector<std::string> out;
  for (const auto& [name, m] : members_) out.push_back(name);
  return out;
}

const Member& SimNetwork::member(const std::string& name) const {
  auto it = members_.find(name);
  if (it == members_.end()) throw Error(ErrorCode::unknown_member, "no member " + name);
  return it->second;
}

Member& SimNetwork::member(const std::string& name) {
  auto it = members_.find(name);
  if (it == members_.end()) throw Error(ErrorCode::unknown_member, "no member " + name);
  return it->second;
}

const Member* SimNetwork::departed(const std::string& name) const {
  auto it = departed_.find(name);
  return it == departed_.end() ? nullptr : &it->second;
}

const KeyTree& SimNetwork::tree_of(const std::string& name) const {
  const auto& tree = member(name).tree();
  if (!tree) throw Error(ErrorCode::invalid_state, name + " holds no tree");
  return *tree;
}

std::size_t SimNetwork::cell_index(const std::string& name) const {
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    if (cells_[i].count(name)) return i;
  }
  throw Error(ErrorCode::unknown_member, "no member " + name);
}

SimNetwork::Snapshot SimNetwork::snapshot() const {
  Snapshot s;
  for (const auto& [name, m] : members_) s.counters.emplace(name, m.counters());
  return s;
}

void SimNetwork::settle(const Snapshot& before) {
  for (auto& account : accounts_) {
    std::uint64_t sig = 0, ver = 0, exp = 0;
    for (const auto& name : account.scope) {
      auto it = members_.find(name);
      if (it == members_.end()) continue;
      const MemberCounters& now = it->second.counters();
      MemberCounters base;
      if (auto b = before.counters.find(name); b != before.counters.end()) base = b->second;
      sig = std::max(sig, now.signatures - base.signatures);
      ver = std::max(ver, now.verifications - base.verifications);
      const std::uint64_t spent = now.exponentiations.count - base.exponentiations.count;
      exp = std::max(exp, spent);
      account.metrics.total_exponentiations += spent;
      account.metrics.sponsor_exponentiations +=
          now.sponsor_exponentiations - base.sponsor_exponentiations;
      if (now.broadcasts > base.broadcasts) account.sponsors.insert(name);
    }
    account.metrics.signatures += sig;
    account.metrics.verifications += ver;
    account.metrics.exponentiations += exp;
  }
}

void SimNetwork::emit(const Message& msg) {
  Bytes wire = encode(msg);
  const std::size_t size = wire.size();
  wire_log_.push_back(std::move(wire));
  for (auto& account : accounts_) {
    if (!account.scope.count(msg.sender)) continue;
    ++account.metrics.messages;
    ++account.metrics.multicasts;
    if (msg.kind == MessageKind::tree_broadcast) ++account.metrics.tree_broadcasts;
  }
  queue_.push_back(Pending{msg, size});
}

void SimNetwork::inject(const Message& msg) {
  Bytes wire = encode(msg);
  const std::size_t size = wire.size();
  wire_log_.push_back(std::move(wire));
  queue_.push_back(Pending{msg, size});
}

void SimNetwork::collect_errors(Member& m) {
  for (const auto& e : m.take_errors()) {
    pending_errors_.push_back(m.name() + ": " + std::string(to_string(e.code())) + " " + e.what());
  }
}

void SimNetwork::deliver_control(const Message& msg, std::size_t ci) {
  const Bytes wire = encode(msg);
  trace_.push_back("round=" + std::to_string(round_) + " from=" + msg.sender +
                   " kind=" + std::string(kind_name(msg.kind)) + " bytes=" + hex_length(wire.size()));
  wire_log_.push_back(wire);
  std::vector<std::string> cell(cells_[ci].begin(), cells_[ci].end());
  maybe_shuffle(cell);
  for (const auto& name : cell) {
    auto& m = member(name);
    if (auto code = m.receive(msg)) {
      pending_errors_.push_back(name + ": " + std::string(to_string(*code)) + " from " + msg.sender);
    }
  }
  for (const auto& name : cell) {
    auto& m = member(name);
    for (const auto& out : m.flush()) emit(out);
    collect_errors(m);
  }
}

void SimNetwork::step() {
  ++round_;
  if (queue_.empty()) return;
  auto batch = std::exchange(queue_, {});
  const Snapshot before = snapshot();

  std::map<std::string, std::vector<Message>> inbox;
  std::set<std::size_t> active;
  for (auto& p : batch) {
    trace_.push_back("round=" + std::to_string(round_) + " from=" + p.msg.sender + " kind=" +
                     std::string(kind_name(p.msg.kind)) + " bytes=" + hex_length(p.bytes));
    if (!members_.count(p.msg.sender)) continue;
    for (const auto& name : cells_[cell_index(p.msg.sender)]) inbox[name].push_back(p.msg);
    for (std::size_t i = 0; i < accounts_.size(); ++i) {
      if (accounts_[i].scope.count(p.msg.sender)) active.insert(i);
    }
  }

  std::vector<std::string> order;
  for (const auto& [name, msgs] : inbox) order.push_back(name);
  maybe_shuffle(order);
  for (const auto& name : order) {
    auto& msgs = inbox[name];
    maybe_shuffle(msgs);
    auto& m = member(name);
    for (const auto& msg : msgs) {
      if (auto code = m.receive(msg)) {
        pending_errors_.push_back(name + ": " + std::string(to_string(*code)) + " from " +
                                  msg.sender);
      }
    }
  }

  order = member_names();
  maybe_shuffle(order);
  for (const auto& name : order) {
    auto& m = member(name);
    for (const auto& out : m.flush()) emit(out);
    collect_errors(m);
  }
  for (auto i : active) ++accounts_[i].metrics.rounds;
  settle(before);
}

void SimNetwork::run_until_quiescent() {
  std::size_t steps = 0;
  while (!queue_.empty()) {
    if (steps++ >= max_rounds_) {
      throw Error(ErrorCode::non_quiescence,
                  "still busy after " + std::to_string(max_rounds_) + " rounds");
    }
    step();
  }
}

std::vector<OpRecord> SimNetwork::run_accounts(OpKind kind,
                                               std::vector<std::vector<std::string>> subjects,
                                               std::vector<std::uint32_t> heights_before,
                                               std::uint64_t joiner_exps) {
  const Snapshot start = op_start_;
  run_until_quiescent();
  std::vector<OpRecord> out;
  for (std::size_t i = 0; i < accounts_.size(); ++i) {
    OpRecord rec;
    rec.kind = kind;
    rec.subjects = std::move(subjects[i]);
    rec.scope = accounts_[i].scope;
    rec.height_before = heights_before[i];
    rec.metrics = accounts_[i].metrics;
    rec.joiner_exponentiations = joiner_exps;
    for (const auto& name : accounts_[i].sponsors) {
      std::uint64_t base = 0;
      if (auto b = start.counters.find(name); b != start.counters.end()) {
        base = b->second.sponsor_exponentiations;
      }
      const Member& m = member(name);
      rec.sponsors[name] = m.counters().sponsor_exponentiations - base;
      if (m.tree()) {
        if (auto leaf = m.tree()->find_leaf(name)) rec.sponsor_depths[name] = leaf->level;
      }
    }
    for (const auto& name : rec.scope) {
      if (auto it = members_.find(name); it != members_.end() && it->second.tree()) {
        rec.height_after = it->second.tree()->height();
        rec.epoch_after = it->second.tree()->epoch();
        break;
      }
    }
    rec.errors = pending_errors_;
    out.push_back(std::move(rec));
  }
  pending_errors_.clear();
  accounts_.clear();
  for (const auto& rec : out) history_.push_back(rec);
  return out;
}

OpRecord SimNetwork::init(const std::string& founder) {
  if (!members_.empty()) throw Error(ErrorCode::invalid_state, "group already initialised");
  spawn(founder).found_group();
  cells_ = {{founder}};
  OpRecord rec;
  rec.kind = OpKind::init;
  rec.subjects = {founder};
  rec.scope = {founder};
  history_.push_back(rec);
  return rec;
}

OpRecord SimNetwork::join(const std::string& name) {
  auto rec = batch_join({name});
  rec.kind = OpKind::join;
  history_.back().kind = OpKind::join;
  return rec;
}

OpRecord SimNetwork::batch_join(const std::vector<std::string>& names) {
  if (members_.empty()) throw Error(ErrorCode::invalid_state, "no group to join; use init");
  if (partitioned()) throw Error(ErrorCode::invalid_state, "cannot join while partitioned");
  if (names.empty()) throw Error(ErrorCode::invalid_argument, "no joiners");
  std::set<std::string> fresh(names.begin(), names.end());
  if (fresh.size() != names.size()) throw Error(ErrorCode::duplicate_member, "repeated joiner");
  for (const auto& n : names) {
    if (members_.count(n)) throw Error(ErrorCode::duplicate_member, "member " + n + " already present");
    if (n.empty()) throw Error(ErrorCode::invalid_argument, "empty member name");
  }
  const KeyTree& tree = tree_of(*cells_[0].begin());
  const std::uint32_t h_before = tree.height();
  const std::string sponsor = join_sponsor(tree);

  std::set<std::string> scope = cells_[0];
  scope.insert(names.begin(), names.end());
  accounts_ = {Account{scope, {}, {}}};
  op_start_ = snapshot();
  const Snapshot before = op_start_;

  std::vector<Message> requests;
  std::uint64_t joiner_exps = 0;
  for (const auto& n : names) {
    Member& m = spawn(n);
    joiner_exps += m.counters().exponentiations.count;
    requests.push_back(m.initiate_join());
    cells_[0].insert(n);
  }
  for (const auto& r : requests) emit(r);
  emit(member(sponsor).offer_for_join());
  settle(before);
  return run_accounts(OpKind::batch_join, {names}, {h_before}, joiner_exps).front();
}

OpRecord SimNetwork::leave(const std::string& name) {
  const std::size_t ci = cell_index(name);
  if (cells_[ci].size() == 1) {
    throw Error(ErrorCode::last_member, "the last member cannot leave; the group dissolves");
  }
  const std::uint32_t h_before = tree_of(name).height();
  departed_.insert_or_assign(name, members_.at(name));
  const Message notice = member(name).initiate_leave();
  members_.erase(name);
  cells_[ci].erase(name);

  accounts_ = {Account{cells_[ci], {}, {}}};
  op_start_ = snapshot();
  const Snapshot before = op_start_;
  deliver_control(notice, ci);
  settle(before);
  return run_accounts(OpKind::leave, {{name}}, {h_before}, 0).front();
}

std::vector<OpRecord> SimNetwork::inject_partition(const std::vector<std::set<std::string>>& cells) {
  if (partitioned()) throw Error(ErrorCode::invalid_state, "already partitioned; heal first");
  if (members_.empty()) throw Error(ErrorCode::invalid_state, "no group");
  std::set<std::string> covered;
  std::size_t total = 0;
  for (const auto& cell : cells) {
    if (cell.empty()) throw Error(ErrorCode::invalid_cell_cover, "empty cell");
    for (const auto& n : cell) {
      if (!members_.count(n)) throw Error(ErrorCode::invalid_cell_cover, "unknown member " + n);
    }
    covered.insert(cell.begin(), cell.end());
    total += cell.size();
  }
  if (cells.size() < 2 || covered.size() != total || covered.size() != members_.size()) {
    throw Error(ErrorCode::invalid_cell_cover, "cells must be at least two disjoint sets covering every member");
  }
  const std::uint32_t h_before = tree_of(*cells_[0].begin()).height();
  cells_ = cells;
  accounts_.clear();
  for (const auto& cell : cells_) accounts_.push_back(Account{cell, {}, {}});
  op_start_ = snapshot();
  const Snapshot before = op_start_;
  std::vector<std::vector<std::string>> subjects;
  for (std::size_t ci = 0; ci < cells_.size(); ++ci) {
    std::vector<std::string> survivors(cells_[ci].begin(), cells_[ci].end());
    subjects.push_back(survivors);
    deliver_control(member(survivors.front()).announce_partition(survivors), ci);
  }
  settle(before);
  return run_accounts(OpKind::partition, subjects,
                      std::vector<std::uint32_t>(cells_.size(), h_before), 0);
}

std::vector<OpRecord> SimNetwork::heal_partition() {
  if (!partitioned()) throw Error(ErrorCode::invalid_state, "not partitioned");
  std::vector<OpRecord> out;
  while (cells_.size() > 1) {
    const KeyTree& a = tree_of(*cells_[0].begin());
    const KeyTree& b = tree_of(*cells_[1].begin());
    const std::uint32_t h_before = std::max(a.height(), b.height());
    const std::string rep_a = a.rightmost_member({0, 0});
    const std::string rep_b = b.rightmost_member({0, 0});

    std::set<std::string> scope = cells_[0];
    scope.insert(cells_[1].begin(), cells_[1].end());
    accounts_ = {Account{scope, {}, {}}};
    op_start_ = snapshot();
    const Snapshot before = op_start_;
    const Message offer_a = member(rep_a).offer_merge();
    const Message offer_b = member(rep_b).offer_merge();
    cells_[0] = scope;
    cells_.erase(cells_.begin() + 1);
    emit(offer_a);
    emit(offer_b);
    settle(before);
    auto recs = run_accounts(OpKind::merge, {std::vector<std::string>(scope.begin(), scope.end())},
                             {h_before}, 0);
    out.push_back(std::move(recs.front()));
  }
  return out;
}

}  // namespace tgdh
