#pragma once

#include <map>
#include <string>
#include <vector>

#include "scalelab/perm.hpp"
#include "scalelab/trees.hpp"

namespace scalelab {

// Automorphism of the rooted q-ary tree described by local permutations at
// finitely many vertices. When depth_valid >= 0 the portrait is a truncation
// and may only be applied to strings of that length or less.
struct RootedPortrait {
  int q = 2;
  int depth_valid = -1;  // -1: exact
  std::map<Digits, Permutation> local;

  Digits apply(const Digits& s) const {
    if (depth_valid >= 0 && static_cast<int>(s.size()) > depth_valid)
      throw ValueError("rooted portrait truncated above requested depth");
    Digits out(s.size());
    Digits prefix;
    prefix.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      auto it = local.find(prefix);
      out[i] = it == local.end()
                   ? s[i]
                   : static_cast<std::uint8_t>(it->second(s[i]));
      prefix.push_back(s[i]);
    }
    return out;
  }

  Permutation level_permutation(int depth) const {
    if (depth_valid >= 0 && depth > depth_valid)
      throw ValueError("rooted portrait truncated above requested depth");
    std::size_t n = 1;
    for (int i = 0; i < depth; ++i) {
      n *= q;
      if (n > limits().max_points) throw LimitError("level size exceeds max_points");
    }
    std::vector<int> im(n);
    Digits s(depth, 0);
    for (std::size_t idx = 0; idx < n; ++idx) {
      std::size_t rem = idx;
      for (int pos = depth - 1; pos >= 0; --pos) {
        s[pos] = static_cast<std::uint8_t>(rem % q);
        rem /= q;
      }
      Digits t = apply(s);
      std::size_t out = 0;
      for (int pos = 0; pos < depth; ++pos) out = out * q + t[pos];
      im[idx] = static_cast<int>(out);
    }
    return Permutation(std::move(im));
  }
};

// Isometry fixing the distinguished end: a translation power along the spine
// followed by an elliptic part described by a finitely-supported portrait of
// local permutations. Applying the element translates first, then applies the
// elliptic part digit by digit.
struct PortraitElement {
  int q = 2;
  int translation = 0;
  std::map<UnrootedVertex, Permutation> portrait;  // identity off the support

  static PortraitElement identity(int q) { return PortraitElement{q, 0, {}}; }

  static PortraitElement pure_translation(int q, int k) {
    return PortraitElement{q, k, {}};
  }

  void set_local(const UnrootedVertex& v, Permutation p) {
    if (p.degree() != q) throw ValueError("local permutation degree must be q");
    if (p.is_identity())
      portrait.erase(v);
    else
      portrait[v] = std::move(p);
  }

  Permutation local_at(const UnrootedVertex& v) const {
    auto it = portrait.find(v);
    return it == portrait.end() ? Permutation(q) : it->second;
  }

  bool is_elliptic() const { return translation == 0; }
};

namespace detail {

inline UnrootedVertex apply_elliptic(const PortraitElement& g,
                                     const UnrootedVertex& v) {
  int start = v.level - v.len() + 1;
  for (const auto& [u, p] : g.portrait) start = std::min(start, u.level + 1);
  Digits out;
  out.reserve(v.level - start + 1);
  UnrootedVertex prefix = UnrootedVertex::spine(v.q, start - 1);
  for (int i = start; i <= v.level; ++i) {
    int d = v.digit_at(i);
    out.push_back(static_cast<std::uint8_t>(g.local_at(prefix)(d)));
    prefix = prefix.child(d);
  }
  return UnrootedVertex(v.q, v.level, std::move(out));
}

}  // namespace detail

inline UnrootedVertex apply(const PortraitElement& g, const UnrootedVertex& v) {
  if (v.q != g.q) throw ValueError("vertex alphabet mismatch");
  return detail::apply_elliptic(g, x0_translate(v, g.translation));
}

// Local permutation of the elliptic element g at v, read back from its action
// on the children of v.
inline Permutation read_local_permutation(const PortraitElement& g,
                                          const UnrootedVertex& v) {
  if (!g.is_elliptic())
    throw ValueError("local permutations are read from elliptic elements");
  std::vector<int> im(g.q);
  for (int j = 0; j < g.q; ++j) {
    UnrootedVertex w = apply(g, v.child(j));
    im[j] = w.digit_at(w.level);
  }
  return Permutation(std::move(im));
}

inline PortraitElement shift_support(const PortraitElement& g, int k) {
  PortraitElement out{g.q, g.translation, {}};
  for (const auto& [u, p] : g.portrait) out.portrait.emplace(x0_translate(u, k), p);
  return out;
}

inline PortraitElement invert(const PortraitElement& g) {
  // inverse of the elliptic part: relocate each local permutation to the
  // image vertex and invert it
  PortraitElement einv{g.q, 0, {}};
  PortraitElement e{g.q, 0, g.portrait};
  for (const auto& [u, p] : g.portrait)
    einv.portrait.emplace(detail::apply_elliptic(e, u), p.inverse());
  PortraitElement out = shift_support(einv, -g.translation);
  out.translation = -g.translation;
  return out;
}

inline PortraitElement compose_elements(const PortraitElement& g,
                                        const PortraitElement& h) {
  if (g.q != h.q) throw ValueError("alphabet mismatch");
  // move h's elliptic part across g's translation
  PortraitElement eh = shift_support(h, g.translation);
  eh.translation = 0;
  PortraitElement eg{g.q, 0, g.portrait};
  PortraitElement ehinv = invert(eh);
  PortraitElement out{g.q, g.translation + h.translation, {}};
  std::set<UnrootedVertex> support;
  for (const auto& [u, p] : eh.portrait) support.insert(u);
  for (const auto& [u, p] : eg.portrait)
    support.insert(detail::apply_elliptic(ehinv, u));
  for (const auto& u : support) {
    Permutation p =
        compose(eg.local_at(detail::apply_elliptic(eh, u)), eh.local_at(u));
    if (!p.is_identity()) out.portrait.emplace(u, std::move(p));
  }
  return out;
}

// Split into translation power and horosphere-preserving part:
// the element equals elliptic-after-translation.
inline std::pair<int, PortraitElement> decompose(const PortraitElement& g) {
  return {g.translation, PortraitElement{g.q, 0, g.portrait}};
}

// Restriction of an elliptic element fixing v to the rooted subtree below v.
inline RootedPortrait section(const PortraitElement& g, const UnrootedVertex& v) {
  if (!g.is_elliptic() || apply(g, v) != v)
    throw ValueError("section requires an elliptic element fixing the vertex");
  RootedPortrait out;
  out.q = g.q;
  for (const auto& [u, p] : g.portrait)
    if (u.below(v)) out.local.emplace(subtree_iso(v, u), p);
  return out;
}

}  // namespace scalelab
