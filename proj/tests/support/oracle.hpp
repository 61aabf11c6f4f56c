#pragma once

// Independent reference computations for the tests. Deliberately avoids the
// library's arithmetic and KDF: raw GMP and raw OpenSSL only.

#include <gmp.h>
#include <openssl/sha.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tgdh/keytree.hpp"

namespace oracle {

struct Group {
  mpz_class p;
  mpz_class g;
  std::string tag;
};

inline Group from(const tgdh::GroupParams& params) {
  return {params.modulus(), params.generator(), params.kdf_tag()};
}

inline mpz_class powm(const mpz_class& base, const mpz_class& exp, const mpz_class& mod) {
  mpz_class out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return out;
}

// Node key as an exponent for the level above; 0 and p-1 are folded to 1.
inline mpz_class as_exponent(const Group& grp, const mpz_class& element) {
  if (element == 0 || element == grp.p - 1) return 1;
  return element;
}

namespace detail {

inline mpz_class node_secret(const Group& grp, const tgdh::KeyTree& tree, const tgdh::NodeId& id,
                             const std::map<std::string, mpz_class>& leaves) {
  const auto& node = tree.node(id);
  if (node.member) {
    auto it = leaves.find(*node.member);
    if (it == leaves.end()) throw std::runtime_error("no secret for " + *node.member);
    return it->second;
  }
  const mpz_class kl = node_secret(grp, tree, id.left(), leaves);
  const mpz_class kr = node_secret(grp, tree, id.right(), leaves);
  return as_exponent(grp, powm(powm(grp.g, kr, grp.p), kl, grp.p));
}

}  // namespace detail

// Root element: g^k for a lone leaf, otherwise (g^k_right)^k_left at the root.
inline mpz_class root_key_oracle(const Group& grp, const tgdh::KeyTree& tree,
                                 const std::map<std::string, mpz_class>& leaves) {
  const tgdh::NodeId root{0, 0};
  const auto& node = tree.node(root);
  if (node.member) return powm(grp.g, leaves.at(*node.member), grp.p);
  const mpz_class kl = detail::node_secret(grp, tree, root.left(), leaves);
  const mpz_class kr = detail::node_secret(grp, tree, root.right(), leaves);
  return powm(powm(grp.g, kr, grp.p), kl, grp.p);
}

inline std::vector<std::uint8_t> big_endian(const mpz_class& v) {
  std::vector<std::uint8_t> out((mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8);
  std::size_t n = 0;
  mpz_export(out.data(), &n, 1, 1, 1, 0, v.get_mpz_t());
  out.resize(n);
  return out;
}

inline std::array<std::uint8_t, 32> group_key(const Group& grp, const mpz_class& root,
                                              std::uint64_t epoch) {
  std::vector<std::uint8_t> buf(grp.tag.begin(), grp.tag.end());
  const auto r = big_endian(root);
  buf.insert(buf.end(), r.begin(), r.end());
  for (int i = 7; i >= 0; --i) buf.push_back(static_cast<std::uint8_t>(epoch >> (8 * i)));
  std::array<std::uint8_t, 32> out{};
  SHA256(buf.data(), buf.size(), out.data());
  return out;
}

inline std::uint64_t depth_recount(std::uint64_t depth) { return depth == 0 ? 1 : 2 * depth; }

// Sponsor path recomputation cost from the tree alone: a blinding and a key
// per level, or a single blinding for a lone member.
inline std::uint64_t sponsor_recount(const tgdh::KeyTree& tree, const std::string& sponsor) {
  const auto leaf = tree.find_leaf(sponsor);
  if (!leaf) throw std::runtime_error("sponsor not in tree");
  std::uint64_t depth = 0;
  for (tgdh::NodeId id = *leaf; !id.is_root(); id = id.parent()) ++depth;
  return depth_recount(depth);
}

inline std::uint32_t ceil_log2(std::uint64_t m) {
  std::uint32_t r = 0;
  while ((std::uint64_t{1} << r) < m) ++r;
  return r;
}

// Least-squares slope of ln y on ln x.
inline double loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle
