#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "scalelab/config.hpp"

namespace scalelab {

using BigInt = boost::multiprecision::cpp_int;

// Finite permutation of {0,...,degree-1}. Composition is a left action:
// compose(g, h) applies h first.
class Permutation {
 public:
  Permutation() = default;

  explicit Permutation(int degree) : images_(degree) {
    std::iota(images_.begin(), images_.end(), 0);
  }

  explicit Permutation(std::vector<int> images) : images_(std::move(images)) {
    std::vector<bool> seen(images_.size(), false);
    for (int x : images_) {
      if (x < 0 || x >= static_cast<int>(images_.size()) || seen[x])
        throw ValueError("image list is not a bijection");
      seen[x] = true;
    }
  }

  int degree() const { return static_cast<int>(images_.size()); }

  int operator()(int x) const { return images_[x]; }

  const std::vector<int>& images() const { return images_; }

  bool is_identity() const {
    for (int i = 0; i < degree(); ++i)
      if (images_[i] != i) return false;
    return true;
  }

  Permutation inverse() const {
    std::vector<int> inv(images_.size());
    for (int i = 0; i < degree(); ++i) inv[images_[i]] = i;
    Permutation p;
    p.images_ = std::move(inv);
    return p;
  }

  friend bool operator==(const Permutation& a, const Permutation& b) {
    return a.images_ == b.images_;
  }
  friend bool operator!=(const Permutation& a, const Permutation& b) {
    return !(a == b);
  }
  friend bool operator<(const Permutation& a, const Permutation& b) {
    return a.images_ < b.images_;
  }

  // lcm of cycle lengths
  BigInt element_order() const {
    std::vector<bool> seen(images_.size(), false);
    BigInt ord = 1;
    for (int i = 0; i < degree(); ++i) {
      if (seen[i]) continue;
      long long len = 0;
      for (int j = i; !seen[j]; j = images_[j]) {
        seen[j] = true;
        ++len;
      }
      ord = boost::multiprecision::lcm(ord, BigInt(len));
    }
    return ord;
  }

  std::vector<std::vector<int>> cycles() const {
    std::vector<std::vector<int>> out;
    std::vector<bool> seen(images_.size(), false);
    for (int i = 0; i < degree(); ++i) {
      if (seen[i] || images_[i] == i) {
        seen[i] = true;
        continue;
      }
      std::vector<int> cyc;
      for (int j = i; !seen[j]; j = images_[j]) {
        seen[j] = true;
        cyc.push_back(j);
      }
      out.push_back(std::move(cyc));
    }
    return out;
  }

  std::string to_cycle_string() const {
    auto cs = cycles();
    if (cs.empty()) return "()";
    std::ostringstream os;
    for (const auto& c : cs) {
      os << '(';
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (k) os << ' ';
        os << c[k];
      }
      os << ')';
    }
    return os.str();
  }

  struct Hash {
    std::size_t operator()(const Permutation& p) const {
      std::size_t h = 0x9e3779b97f4a7c15ull;
      for (int x : p.images_)
        h = (h ^ static_cast<std::size_t>(x)) * 0x100000001b3ull;
      return h;
    }
  };

 private:
  std::vector<int> images_;
};

// g after h: compose(g, h)(x) = g(h(x))
inline Permutation compose(const Permutation& g, const Permutation& h) {
  if (g.degree() != h.degree())
    throw ValueError("compose: degree mismatch (" + std::to_string(g.degree()) +
                     " vs " + std::to_string(h.degree()) + ")");
  std::vector<int> im(g.degree());
  for (int x = 0; x < g.degree(); ++x) im[x] = g(h(x));
  return Permutation(std::move(im));
}

inline Permutation perm_power(const Permutation& g, long long e) {
  Permutation base = e >= 0 ? g : g.inverse();
  unsigned long long n = e >= 0 ? static_cast<unsigned long long>(e)
                                : static_cast<unsigned long long>(-e);
  Permutation acc(g.degree());
  while (n) {
    if (n & 1) acc = compose(acc, base);
    base = compose(base, base);
    n >>= 1;
  }
  return acc;
}

// Cycle notation: whitespace-separated disjoint cycles, e.g. "(0 3)(1 4)(2 5)".
// Empty text and "()" both give the identity.
inline Permutation parse_cycles(const std::string& text, int degree) {
  if (degree <= 0) throw ValueError("parse_cycles: degree must be positive");
  std::vector<int> im(degree);
  std::iota(im.begin(), im.end(), 0);
  std::vector<bool> used(degree, false);
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  skip_ws();
  while (i < text.size()) {
    if (text[i] != '(') throw ParseError("expected '(' in cycle notation");
    ++i;
    std::vector<int> cyc;
    skip_ws();
    while (i < text.size() && text[i] != ')') {
      if (!std::isdigit(static_cast<unsigned char>(text[i])))
        throw ParseError("expected digit in cycle notation");
      int v = 0;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])))
        v = v * 10 + (text[i++] - '0');
      if (v >= degree)
        throw ParseError("point " + std::to_string(v) + " exceeds degree " +
                         std::to_string(degree));
      if (used[v]) throw ParseError("repeated point " + std::to_string(v));
      used[v] = true;
      cyc.push_back(v);
      skip_ws();
    }
    if (i >= text.size()) throw ParseError("unterminated cycle");
    ++i;
    for (std::size_t k = 0; k < cyc.size(); ++k)
      im[cyc[k]] = cyc[(k + 1) % cyc.size()];
    skip_ws();
  }
  return Permutation(std::move(im));
}

// ---------------------------------------------------------------------------

struct GroupFingerprint {
  BigInt order = 0;
  bool abelian = false;
  bool order_only = false;  // histogram and derived length were skipped
  std::map<BigInt, std::size_t> element_order_histogram;
  int derived_length = -1;  // -1 when not computed

  friend bool operator==(const GroupFingerprint& a, const GroupFingerprint& b) {
    return a.order == b.order && a.abelian == b.abelian &&
           a.order_only == b.order_only &&
           a.element_order_histogram == b.element_order_histogram &&
           a.derived_length == b.derived_length;
  }
};

// Permutation group given by generators. Stabilizer chain (deterministic
// base 0,1,2,...) and explicit closure are computed on demand and cached;
// caches are compute-once and safe for concurrent reads afterwards.
class PermGroup {
 public:
  PermGroup(int degree, std::vector<Permutation> generators)
      : degree_(degree), gens_(std::move(generators)) {
    for (const auto& g : gens_)
      if (g.degree() != degree_)
        throw ValueError("generator degree does not match group degree");
    if (static_cast<std::size_t>(degree_) > limits().max_points)
      throw LimitError("degree " + std::to_string(degree_) +
                       " exceeds max_points");
  }

  PermGroup(const PermGroup& other) : PermGroup(other.degree_, other.gens_) {}
  PermGroup& operator=(const PermGroup& other) {
    degree_ = other.degree_;
    gens_ = other.gens_;
    chain_.reset();
    closure_.reset();
    return *this;
  }

  static PermGroup trivial(int degree) { return PermGroup(degree, {}); }

  int degree() const { return degree_; }
  const std::vector<Permutation>& generators() const { return gens_; }

  // --- orbits ----------------------------------------------------------

  std::vector<std::vector<int>> orbits() const {
    std::vector<int> parent(degree_);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& g : gens_)
      for (int x = 0; x < degree_; ++x) {
        int a = find(x), b = find(g(x));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    std::map<int, std::vector<int>> buckets;
    for (int x = 0; x < degree_; ++x) buckets[find(x)].push_back(x);
    std::vector<std::vector<int>> out;
    out.reserve(buckets.size());
    for (auto& [r, v] : buckets) out.push_back(std::move(v));
    return out;
  }

  bool is_transitive() const { return orbits().size() == 1; }

  std::vector<int> orbit_of(int x) const {
    std::vector<int> orb{x};
    std::vector<bool> seen(degree_, false);
    seen[x] = true;
    for (std::size_t head = 0; head < orb.size(); ++head)
      for (const auto& g : gens_) {
        int y = g(orb[head]);
        if (!seen[y]) {
          seen[y] = true;
          orb.push_back(y);
        }
      }
    return orb;
  }

  // --- order / membership ------------------------------------------------

  BigInt order() const {
    const Chain& c = chain();
    BigInt n = 1;
    for (const auto& lvl : c.levels)
      n *= static_cast<long long>(lvl.orbit.size());
    return n;
  }

  bool contains(const Permutation& p) const {
    if (p.degree() != degree_) return false;
    return sift(chain(), p).is_identity();
  }

  // Explicit BFS closure in discovery order.
  const std::vector<Permutation>& elements(std::size_t cap = 0) const {
    if (cap == 0) cap = limits().max_closure;
    std::call_once(closure_once_, [&] { closure_ = bfs_closure(cap); });
    if (!closure_) throw LimitError("closure exceeds configured limit");
    return *closure_;
  }

  bool is_abelian() const {
    for (std::size_t i = 0; i < gens_.size(); ++i)
      for (std::size_t j = i + 1; j < gens_.size(); ++j)
        if (compose(gens_[i], gens_[j]) != compose(gens_[j], gens_[i]))
          return false;
    return true;
  }

  // --- block systems -------------------------------------------------------

  // Finest block system in which a and b share a block (group must be
  // transitive). Blocks are sorted and listed by least element.
  std::vector<std::vector<int>> block_system_from_pair(int a, int b) const {
    std::vector<int> parent(degree_);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::vector<std::pair<int, int>> work;
    auto unite = [&](int x, int y) {
      int rx = find(x), ry = find(y);
      if (rx == ry) return;
      parent[std::max(rx, ry)] = std::min(rx, ry);
      work.emplace_back(x, y);
    };
    unite(a, b);
    for (std::size_t head = 0; head < work.size(); ++head) {
      auto [x, y] = work[head];
      for (const auto& g : gens_) unite(g(x), g(y));
    }
    std::map<int, std::vector<int>> blocks;
    for (int x = 0; x < degree_; ++x) blocks[find(x)].push_back(x);
    std::vector<std::vector<int>> out;
    out.reserve(blocks.size());
    for (auto& [r, v] : blocks) out.push_back(std::move(v));
    return out;
  }

  // All minimal nontrivial block systems of a transitive group.
  std::vector<std::vector<std::vector<int>>> minimal_block_systems() const {
    if (!is_transitive())
      throw ValueError("minimal_block_systems: group is not transitive");
    std::vector<std::vector<std::vector<int>>> found;
    std::set<std::vector<std::vector<int>>> seen;
    for (int x = 1; x < degree_; ++x) {
      auto sys = block_system_from_pair(0, x);
      if (sys.size() <= 1 || sys.size() == static_cast<std::size_t>(degree_))
        continue;
      if (!seen.insert(sys).second) continue;
      // minimal iff every other point of the 0-block regenerates the system
      bool minimal = true;
      for (int y : sys.front()) {
        if (y == 0) continue;
        if (block_system_from_pair(0, y) != sys) {
          minimal = false;
          break;
        }
      }
      if (minimal) found.push_back(sys);
    }
    return found;
  }

  bool is_primitive() const { return minimal_block_systems().empty(); }

  // --- coset actions ---------------------------------------------------

  // Action on the left cosets of the stabilizer of x, realized on the orbit
  // of x in BFS order (coset g.Stab <-> point g(x)). Second component maps
  // coset index -> point.
  std::pair<PermGroup, std::vector<int>> coset_action_point_stabilizer(
      int x) const {
    std::vector<int> orb = orbit_of(x);
    std::vector<int> where(degree_, -1);
    for (std::size_t i = 0; i < orb.size(); ++i)
      where[orb[i]] = static_cast<int>(i);
    std::vector<Permutation> gens;
    gens.reserve(gens_.size());
    for (const auto& g : gens_) {
      std::vector<int> im(orb.size());
      for (std::size_t i = 0; i < orb.size(); ++i) im[i] = where[g(orb[i])];
      gens.emplace_back(std::move(im));
    }
    return {PermGroup(static_cast<int>(orb.size()), std::move(gens)),
            std::move(orb)};
  }

  // Action on left cosets gH of an explicitly listed subgroup H, enumerated
  // by BFS over the generators from the identity coset.
  PermGroup coset_action_subgroup(const std::vector<Permutation>& subgroup) const {
    if (subgroup.empty())
      throw ValueError("coset_action: empty subgroup set");
    std::set<Permutation> hset(subgroup.begin(), subgroup.end());
    if (!hset.count(Permutation(degree_)))
      throw ValueError("coset_action: subgroup set lacks the identity");
    for (const auto& a : subgroup) {
      if (a.degree() != degree_ || !contains(a))
        throw ValueError("coset_action: element not in group");
      for (const auto& b : subgroup)
        if (!hset.count(compose(a, b)))
          throw ValueError("coset_action: set not closed under products");
    }
    auto coset_key = [&](const Permutation& rep) {
      std::vector<int> best;
      for (const auto& h : hset) {
        auto im = compose(rep, h).images();
        if (best.empty() || im < best) best = std::move(im);
      }
      return best;
    };
    std::map<std::vector<int>, int> index_of;
    std::vector<Permutation> reps;
    reps.emplace_back(degree_);
    index_of[coset_key(reps[0])] = 0;
    for (std::size_t head = 0; head < reps.size(); ++head) {
      if (reps.size() > limits().max_cosets)
        throw LimitError("coset enumeration exceeds max_cosets");
      for (const auto& g : gens_) {
        Permutation moved = compose(g, reps[head]);
        auto key = coset_key(moved);
        if (!index_of.count(key)) {
          index_of.emplace(std::move(key), static_cast<int>(reps.size()));
          reps.push_back(std::move(moved));
        }
      }
    }
    int n = static_cast<int>(reps.size());
    std::vector<Permutation> out_gens;
    out_gens.reserve(gens_.size());
    for (const auto& g : gens_) {
      std::vector<int> im(n);
      for (int c = 0; c < n; ++c)
        im[c] = index_of.at(coset_key(compose(g, reps[c])));
      out_gens.emplace_back(std::move(im));
    }
    return PermGroup(n, std::move(out_gens));
  }

  // --- fingerprint -------------------------------------------------------

  GroupFingerprint fingerprint() const {
    GroupFingerprint fp;
    fp.order = order();
    fp.abelian = is_abelian();
    if (fp.order > BigInt(static_cast<unsigned long long>(limits().max_closure))) {
      fp.order_only = true;
      return fp;
    }
    const auto& elems = elements();
    for (const auto& e : elems) ++fp.element_order_histogram[e.element_order()];
    fp.derived_length = derived_length();
    return fp;
  }

 private:
  struct Level {
    int base = 0;
    std::vector<Permutation> gens;
    std::vector<int> orbit;     // BFS discovery order, orbit[0] = base
    std::vector<int> tree_gen;  // point -> generator index reaching it
    std::vector<int> tree_prev; // point -> previous point on Schreier tree
  };
  struct Chain {
    std::deque<Level> levels;  // stable references across insertions
  };

  int degree_;
  std::vector<Permutation> gens_;

  mutable std::once_flag chain_once_, closure_once_;
  mutable std::unique_ptr<Chain> chain_;
  mutable std::optional<std::vector<Permutation>> closure_;

  std::optional<std::vector<Permutation>> bfs_closure(std::size_t cap) const {
    std::vector<Permutation> elems{Permutation(degree_)};
    std::unordered_set<Permutation, Permutation::Hash> seen{elems[0]};
    for (std::size_t head = 0; head < elems.size(); ++head) {
      for (const auto& g : gens_) {
        Permutation n = compose(g, elems[head]);
        if (seen.insert(n).second) {
          if (elems.size() >= cap) return std::nullopt;
          elems.push_back(std::move(n));
        }
      }
    }
    return elems;
  }

  const Chain& chain() const {
    std::call_once(chain_once_, [&] {
      chain_ = std::make_unique<Chain>();
      for (const auto& g : gens_)
        if (!g.is_identity()) insert_generator(*chain_, g, 0);
    });
    return *chain_;
  }

  static int smallest_moved(const Permutation& p) {
    for (int i = 0; i < p.degree(); ++i)
      if (p(i) != i) return i;
    return -1;
  }

  // u with u(base) = pt, composed along the Schreier tree
  static Permutation transversal(const Level& lvl, int pt, int degree) {
    Permutation u(degree);
    int x = pt;
    while (x != lvl.base) {
      u = compose(u, lvl.gens[lvl.tree_gen[x]]);
      x = lvl.tree_prev[x];
    }
    // u = s_k ... s_1 read along the path from base to pt
    return u;
  }

  static Permutation sift(const Chain& c, Permutation p) {
    for (const auto& lvl : c.levels) {
      int x = p(lvl.base);
      if (x == lvl.base) continue;
      if (lvl.tree_prev[x] < 0) return p;  // not in the orbit
      while (x != lvl.base) {
        p = compose(lvl.gens[lvl.tree_gen[x]].inverse(), p);
        x = p(lvl.base);
      }
    }
    return p;
  }

  static void rebuild_orbit(Level& lvl, int degree) {
    lvl.orbit.assign(1, lvl.base);
    lvl.tree_gen.assign(degree, -1);
    lvl.tree_prev.assign(degree, -1);
    lvl.tree_prev[lvl.base] = lvl.base;
    for (std::size_t head = 0; head < lvl.orbit.size(); ++head) {
      int p = lvl.orbit[head];
      for (std::size_t gi = 0; gi < lvl.gens.size(); ++gi) {
        int q = lvl.gens[gi](p);
        if (lvl.tree_prev[q] < 0) {
          lvl.tree_prev[q] = p;
          lvl.tree_gen[q] = static_cast<int>(gi);
          lvl.orbit.push_back(q);
        }
      }
    }
  }

  static void insert_generator(Chain& c, Permutation g, std::size_t from) {
    if (g.is_identity()) return;
    // sift to a residue; members vanish
    std::size_t drop = from;
    for (; drop < c.levels.size(); ++drop) {
      const Level& lvl = c.levels[drop];
      int x = g(lvl.base);
      if (x == lvl.base) continue;
      if (lvl.tree_prev[x] < 0) break;  // extends this level's orbit
      while (x != lvl.base) {
        g = compose(lvl.gens[lvl.tree_gen[x]].inverse(), g);
        x = g(lvl.base);
      }
      if (g.is_identity()) return;
    }
    if (drop == c.levels.size()) {
      Level fresh;
      fresh.base = smallest_moved(g);
      rebuild_orbit(fresh, g.degree());
      c.levels.push_back(std::move(fresh));
    }
    // the residue fixes the bases above `drop` and strengthens every level
    // from the insertion point down to it
    int degree = g.degree();
    for (std::size_t j = from; j <= drop; ++j) {
      Level& lvl = c.levels[j];
      lvl.gens.push_back(g);
      rebuild_orbit(lvl, degree);
      for (int p : lvl.orbit) {
        Permutation up = transversal(lvl, p, degree);
        for (const auto& s : lvl.gens) {
          Permutation usp = transversal(lvl, s(p), degree);
          Permutation schreier = compose(usp.inverse(), compose(s, up));
          if (!schreier.is_identity())
            insert_generator(c, std::move(schreier), j + 1);
        }
      }
    }
  }

  // length of the derived series, via normal closures of generator commutators
  int derived_length() const {
    std::vector<Permutation> current;
    for (const auto& g : gens_)
      if (!g.is_identity()) current.push_back(g);
    int length = 0;
    while (!current.empty()) {
      std::vector<Permutation> comms;
      std::unordered_set<Permutation, Permutation::Hash> seen;
      for (const auto& a : current)
        for (const auto& b : current) {
          Permutation comm =
              compose(compose(a.inverse(), b.inverse()), compose(a, b));
          if (!comm.is_identity() && seen.insert(comm).second)
            comms.push_back(std::move(comm));
        }
      ++length;
      if (comms.empty()) break;  // current term is abelian
      for (std::size_t head = 0; head < comms.size(); ++head) {
        for (const auto& g : current) {
          Permutation conj = compose(compose(g, comms[head]), g.inverse());
          if (!conj.is_identity() && seen.insert(conj).second)
            comms.push_back(std::move(conj));
        }
        if (comms.size() > limits().max_closure) return -1;
      }
      current = std::move(comms);
      if (length > 64) return -1;
    }
    return length;
  }
};

}  // namespace scalelab
