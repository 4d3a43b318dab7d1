#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "scalelab/config.hpp"

namespace scalelab {

using Digits = std::vector<std::uint8_t>;

// Vertex of the rooted q-ary tree: a finite digit string, empty = root.
struct RootedVertex {
  int q = 2;
  Digits digits;

  friend bool operator==(const RootedVertex& a, const RootedVertex& b) {
    return a.q == b.q && a.digits == b.digits;
  }
  friend bool operator<(const RootedVertex& a, const RootedVertex& b) {
    return a.digits < b.digits;
  }
};

// Vertex of the (q+1)-regular tree with a distinguished end, as a semi-infinite
// digit string (w_i)_{i<=level} that is 0 far toward the end. Stored in
// canonical form: only the suffix starting at the first nonzero digit.
// The all-zero vertex at level n is the spine vertex.
struct UnrootedVertex {
  int q = 2;
  int level = 0;  // Busemann value
  Digits digits;  // canonical: empty, or digits.front() != 0

  UnrootedVertex() = default;
  UnrootedVertex(int q_, int level_, Digits digits_)
      : q(q_), level(level_), digits(std::move(digits_)) {
    std::size_t lead = 0;
    while (lead < digits.size() && digits[lead] == 0) ++lead;
    if (lead) digits.erase(digits.begin(), digits.begin() + lead);
    for (auto d : digits)
      if (d >= q) throw ValueError("vertex digit exceeds alphabet");
  }

  static UnrootedVertex spine(int q, int n) { return UnrootedVertex(q, n, {}); }

  bool on_spine() const { return digits.empty(); }

  int len() const { return static_cast<int>(digits.size()); }

  // conceptual digit w_i for i <= level
  int digit_at(int i) const {
    if (i > level) throw ValueError("digit index above vertex level");
    int k = i - (level - len());
    return k <= 0 ? 0 : digits[k - 1];
  }

  UnrootedVertex child(int j) const {
    if (j < 0 || j >= q) throw ValueError("child digit out of range");
    Digits d = digits;
    if (!(d.empty() && j == 0)) d.push_back(static_cast<std::uint8_t>(j));
    return UnrootedVertex(q, level + 1, std::move(d));
  }

  UnrootedVertex parent() const {
    Digits d = digits;
    if (!d.empty()) d.pop_back();
    return UnrootedVertex(q, level - 1, std::move(d));
  }

  // ancestor on the given horosphere (toward the fixed end)
  UnrootedVertex ancestor_at(int lvl) const {
    if (lvl > level) throw ValueError("ancestor level below vertex");
    Digits d = digits;
    int drop = level - lvl;
    while (drop-- > 0 && !d.empty()) d.pop_back();
    return UnrootedVertex(q, lvl, std::move(d));
  }

  bool below(const UnrootedVertex& anchor) const {
    if (q != anchor.q || level < anchor.level) return false;
    return ancestor_at(anchor.level) == anchor;
  }

  friend bool operator==(const UnrootedVertex& a, const UnrootedVertex& b) {
    return a.q == b.q && a.level == b.level && a.digits == b.digits;
  }
  friend bool operator!=(const UnrootedVertex& a, const UnrootedVertex& b) {
    return !(a == b);
  }
  friend bool operator<(const UnrootedVertex& a, const UnrootedVertex& b) {
    if (a.level != b.level) return a.level < b.level;
    if (a.digits.size() != b.digits.size())
      return a.digits.size() < b.digits.size();
    return a.digits < b.digits;
  }

  // textual form "level:digits", e.g. "2:102"; "0:" is the basepoint
  std::string to_string() const {
    if (q > 10)
      throw ValueError("textual vertex syntax supports alphabets up to 10");
    std::string s = std::to_string(level) + ":";
    for (auto d : digits) s += static_cast<char>('0' + d);
    return s;
  }

  static UnrootedVertex parse(const std::string& text, int q) {
    auto colon = text.find(':');
    if (colon == std::string::npos)
      throw ParseError("vertex literal needs 'level:digits'");
    int lvl;
    try {
      lvl = std::stoi(text.substr(0, colon));
    } catch (const std::exception&) {
      throw ParseError("bad vertex level in '" + text + "'");
    }
    Digits d;
    for (std::size_t i = colon + 1; i < text.size(); ++i) {
      char c = text[i];
      if (c < '0' || c > '9') throw ParseError("bad vertex digit in '" + text + "'");
      if (c - '0' >= q) throw ParseError("vertex digit exceeds alphabet");
      d.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    return UnrootedVertex(q, lvl, std::move(d));
  }
};

inline int busemann(const UnrootedVertex& v) { return v.level; }

inline UnrootedVertex x0_translate(const UnrootedVertex& v, int k) {
  UnrootedVertex w = v;
  w.level += k;
  return w;
}

// Address of w inside the rooted subtree hanging off `anchor`.
inline Digits subtree_iso(const UnrootedVertex& anchor, const UnrootedVertex& w) {
  if (!w.below(anchor))
    throw ValueError("subtree_iso: vertex is not below the anchor");
  Digits out;
  out.reserve(w.level - anchor.level);
  for (int i = anchor.level + 1; i <= w.level; ++i)
    out.push_back(static_cast<std::uint8_t>(w.digit_at(i)));
  return out;
}

inline UnrootedVertex subtree_iso_inv(const UnrootedVertex& anchor,
                                      const Digits& address) {
  Digits d;
  d.reserve(anchor.digits.size() + address.size());
  d = anchor.digits;
  d.insert(d.end(), address.begin(), address.end());
  return UnrootedVertex(anchor.q, anchor.level + static_cast<int>(address.size()),
                        std::move(d));
}

// Label of the edge (v, neighbor) in the standard labelling: q toward the end,
// the child digit otherwise.
inline int standard_label(const UnrootedVertex& v, const UnrootedVertex& neighbor) {
  if (neighbor == v.parent()) return v.q;
  if (neighbor.level == v.level + 1 && neighbor.parent() == v)
    return neighbor.digit_at(neighbor.level);
  throw ValueError("standard_label: not a neighbor");
}

// Truncation of the tree to the subtree below the spine vertex at level -R,
// cut at level D.
struct TreeWindow {
  int q = 2;
  int R = 6;
  int D = 6;

  UnrootedVertex anchor() const { return UnrootedVertex::spine(q, -R); }

  bool contains(const UnrootedVertex& v) const {
    return v.q == q && v.level >= -R && v.level <= D && v.len() <= v.level + R;
  }

  std::size_t count_at_level(int lvl) const {
    std::size_t n = 1;
    for (int i = 0; i < lvl + R; ++i) {
      n *= static_cast<std::size_t>(q);
      if (n > limits().max_points)
        throw LimitError("window level size exceeds max_points");
    }
    return n;
  }

  std::vector<UnrootedVertex> vertices_at_level(int lvl) const {
    if (lvl < -R || lvl > D) throw ValueError("level outside window");
    std::size_t n = count_at_level(lvl);
    std::vector<UnrootedVertex> out;
    out.reserve(n);
    Digits address(lvl + R, 0);
    UnrootedVertex a = anchor();
    for (std::size_t idx = 0; idx < n; ++idx) {
      std::size_t rem = idx;
      for (int pos = lvl + R - 1; pos >= 0; --pos) {
        address[pos] = static_cast<std::uint8_t>(rem % q);
        rem /= q;
      }
      out.push_back(subtree_iso_inv(a, address));
    }
    return out;
  }

  std::vector<UnrootedVertex> all_vertices() const {
    std::vector<UnrootedVertex> out;
    for (int lvl = -R; lvl <= D; ++lvl) {
      auto level = vertices_at_level(lvl);
      out.insert(out.end(), level.begin(), level.end());
    }
    return out;
  }
};

// Per-vertex labelling of child edges by {0..q-1}; every parent edge
// implicitly carries the label q.
struct EdgeLabelling {
  int q = 2;
  std::map<UnrootedVertex, std::vector<std::uint8_t>> child_labels;

  bool covers(const UnrootedVertex& v) const { return child_labels.count(v) > 0; }

  int label(const UnrootedVertex& v, int child_digit) const {
    auto it = child_labels.find(v);
    if (it == child_labels.end())
      throw ValueError("edge labelling does not cover vertex " + v.to_string());
    return it->second.at(child_digit);
  }

  void set(const UnrootedVertex& v, std::vector<std::uint8_t> labels) {
    if (static_cast<int>(labels.size()) != q)
      throw ValueError("child label list must have q entries");
    child_labels[v] = std::move(labels);
  }

  // child labels must each be a bijection onto {0..q-1}
  bool child_maps_bijective() const {
    for (const auto& [v, labels] : child_labels) {
      std::vector<bool> seen(q, false);
      for (auto l : labels) {
        if (l >= q || seen[l]) return false;
        seen[l] = true;
      }
    }
    return true;
  }

  // the spine edges covered by the labelling all carry label 0
  bool spine_path_zero() const {
    for (const auto& [v, labels] : child_labels)
      if (v.on_spine() && labels[0] != 0) return false;
    return true;
  }

  static EdgeLabelling standard(const TreeWindow& win) {
    EdgeLabelling out;
    out.q = win.q;
    for (int lvl = -win.R; lvl < win.D; ++lvl)
      for (const auto& v : win.vertices_at_level(lvl)) {
        std::vector<std::uint8_t> labels(win.q);
        for (int j = 0; j < win.q; ++j) labels[j] = static_cast<std::uint8_t>(j);
        out.child_labels.emplace(v, std::move(labels));
      }
    return out;
  }

  friend bool operator==(const EdgeLabelling& a, const EdgeLabelling& b) {
    return a.q == b.q && a.child_labels == b.child_labels;
  }
};

}  // namespace scalelab
