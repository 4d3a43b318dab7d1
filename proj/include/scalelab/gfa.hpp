#pragma once

#include <algorithm>
#include <istream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "scalelab/perm.hpp"
#include "scalelab/residue.hpp"
#include "scalelab/trees.hpp"

namespace scalelab {

// Finite group as a Cayley table. Element 0 is the identity.
struct FiniteGroup {
  std::string name = "custom";
  std::vector<std::string> element_names;
  std::vector<std::vector<int>> table;  // table[a][b] = a*b
  std::vector<int> inv;

  int order() const { return static_cast<int>(table.size()); }
  int mul(int a, int b) const { return table[a][b]; }
  int inverse(int a) const { return inv[a]; }

  void finalize() {
    int n = order();
    if (element_names.empty())
      for (int i = 0; i < n; ++i) element_names.push_back("g" + std::to_string(i));
    if (static_cast<int>(element_names.size()) != n)
      throw ValueError("element name count does not match order");
    for (int a = 0; a < n; ++a) {
      if (static_cast<int>(table[a].size()) != n)
        throw ValueError("Cayley table is not square");
      if (table[0][a] != a || table[a][0] != a)
        throw ValueError("element 0 is not an identity");
      for (int b = 0; b < n; ++b)
        if (table[a][b] < 0 || table[a][b] >= n)
          throw ValueError("Cayley table entry out of range");
    }
    inv.assign(n, -1);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b)
        if (table[a][b] == 0) {
          if (table[b][a] != 0) throw ValueError("one-sided inverse");
          inv[a] = b;
        }
      if (inv[a] < 0) throw ValueError("element without inverse");
    }
    if (n <= 64) {
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c)
            if (mul(mul(a, b), c) != mul(a, mul(b, c)))
              throw ValueError("Cayley table is not associative");
    }
  }

  // elements s^a t^b with t^3 = s^2 = 1 and s t s = t^-1; index = 3a+b
  static FiniteGroup sym3() {
    FiniteGroup f;
    f.name = "sym3";
    f.element_names = {"1", "t", "t2", "s", "st", "st2"};
    f.table.assign(6, std::vector<int>(6, 0));
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 2; ++c)
          for (int d = 0; d < 3; ++d) {
            int e1 = (a + c) % 2;
            int e2 = (((c ? -b : b) + d) % 3 + 3) % 3;
            f.table[3 * a + b][3 * c + d] = 3 * e1 + e2;
          }
    f.finalize();
    return f;
  }

  static FiniteGroup cyclic(int n, const std::string& name) {
    FiniteGroup f;
    f.name = name;
    f.table.assign(n, std::vector<int>(n, 0));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) f.table[a][b] = (a + b) % n;
    f.finalize();
    return f;
  }

  static FiniteGroup c4() { return cyclic(4, "c4"); }

  // "order n" (optional "names ..." line) followed by n rows of n indices
  static FiniteGroup from_cayley_stream(std::istream& in) {
    FiniteGroup f;
    std::string line;
    int line_no = 0, n = -1, row = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string stripped = line.substr(0, line.find('#'));
      std::istringstream ls(stripped);
      std::string head;
      if (!(ls >> head)) continue;
      if (head == "order") {
        if (!(ls >> n) || n <= 0) throw ParseError("bad order", line_no);
        f.table.assign(n, {});
      } else if (head == "names") {
        std::string nm;
        while (ls >> nm) f.element_names.push_back(nm);
      } else {
        if (n < 0) throw ParseError("row before order line", line_no);
        if (row >= n) throw ParseError("too many table rows", line_no);
        std::istringstream rs(stripped);
        int v;
        while (rs >> v) f.table[row].push_back(v);
        if (static_cast<int>(f.table[row].size()) != n)
          throw ParseError("expected " + std::to_string(n) + " entries", line_no);
        ++row;
      }
    }
    if (n < 0) throw ParseError("missing order line", 0);
    if (row != n) throw ParseError("missing table rows", line_no);
    try {
      f.finalize();
    } catch (const Error& e) {
      throw ParseError(e.what(), 0);
    }
    return f;
  }
};

using FiniteGroupPtr = std::shared_ptr<const FiniteGroup>;

inline FiniteGroupPtr make_group(FiniteGroup f) {
  return std::make_shared<const FiniteGroup>(std::move(f));
}

// Sorted element-index set, closed under the group operations.
struct SubgroupSet {
  std::vector<int> elems;

  SubgroupSet() : elems{0} {}
  explicit SubgroupSet(std::vector<int> e) : elems(std::move(e)) {
    std::sort(elems.begin(), elems.end());
    elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
  }

  static SubgroupSet trivial() { return SubgroupSet(); }
  static SubgroupSet full(const FiniteGroup& f) {
    std::vector<int> all(f.order());
    std::iota(all.begin(), all.end(), 0);
    return SubgroupSet(std::move(all));
  }

  int order() const { return static_cast<int>(elems.size()); }
  bool contains(int x) const {
    return std::binary_search(elems.begin(), elems.end(), x);
  }
  bool subset_of(const SubgroupSet& other) const {
    return std::includes(other.elems.begin(), other.elems.end(), elems.begin(),
                         elems.end());
  }
  friend bool operator==(const SubgroupSet& a, const SubgroupSet& b) {
    return a.elems == b.elems;
  }
  friend bool operator!=(const SubgroupSet& a, const SubgroupSet& b) {
    return !(a == b);
  }

  void validate(const FiniteGroup& f) const {
    if (elems.empty() || elems.front() != 0)
      throw ValueError("subgroup must contain the identity");
    for (int a : elems) {
      if (a < 0 || a >= f.order())
        throw ValueError("subgroup element out of range");
      if (!contains(f.inverse(a)))
        throw ValueError("subgroup not inverse-closed");
      for (int b : elems)
        if (!contains(f.mul(a, b))) throw ValueError("subgroup not closed");
    }
  }

  SubgroupSet intersect(const SubgroupSet& other) const {
    std::vector<int> out;
    std::set_intersection(elems.begin(), elems.end(), other.elems.begin(),
                          other.elems.end(), std::back_inserter(out));
    return SubgroupSet(std::move(out));
  }

  SubgroupSet conjugate(const FiniteGroup& f, int g) const {
    std::vector<int> out;
    out.reserve(elems.size());
    for (int a : elems) out.push_back(f.mul(f.mul(g, a), f.inverse(g)));
    return SubgroupSet(std::move(out));
  }

  std::vector<int> set_product(const FiniteGroup& f, const SubgroupSet& other) const {
    std::set<int> out;
    for (int a : elems)
      for (int b : other.elems) out.insert(f.mul(a, b));
    return std::vector<int>(out.begin(), out.end());
  }

  // greedy small generating set
  std::vector<int> generating_set(const FiniteGroup& f) const {
    std::vector<int> gens;
    std::set<int> closure{0};
    for (int a : elems) {
      if (closure.count(a)) continue;
      gens.push_back(a);
      std::vector<int> work(closure.begin(), closure.end());
      closure.insert(a);
      work.push_back(a);
      for (std::size_t head = 0; head < work.size(); ++head)
        for (int g : gens)
          for (int x : {f.mul(work[head], g), f.mul(g, work[head])})
            if (closure.insert(x).second) work.push_back(x);
    }
    return gens;
  }

  // coset representatives of `sub` inside this subgroup: the minimal element
  // of each coset, identity first, ascending
  std::vector<int> coset_reps(const FiniteGroup& f, const SubgroupSet& sub) const {
    std::vector<int> reps;
    std::set<int> covered;
    for (int v : elems) {
      if (covered.count(v)) continue;
      reps.push_back(v);
      for (int w : sub.elems) covered.insert(f.mul(v, w));
    }
    return reps;
  }
};

// Normal core of A in F.
inline SubgroupSet kernel_core(const FiniteGroup& f, const SubgroupSet& a) {
  SubgroupSet core = a;
  for (int g = 0; g < f.order(); ++g) core = core.intersect(a.conjugate(f, g));
  return core;
}

// Finitely supported bi-infinite sequence of group elements with the
// coordinatewise product; the shift moves coordinate m to m+1.
struct FSeqElement {
  std::vector<std::pair<int, int>> coords;  // (coordinate, element), sorted

  static FSeqElement single(int coord, int elt) {
    FSeqElement h;
    if (elt != 0) h.coords.emplace_back(coord, elt);
    return h;
  }

  int at(int m) const {
    for (const auto& [c, e] : coords)
      if (c == m) return e;
    return 0;
  }

  bool is_identity() const { return coords.empty(); }

  FSeqElement mul(const FiniteGroup& f, const FSeqElement& other) const {
    FSeqElement out;
    std::size_t i = 0, j = 0;
    while (i < coords.size() || j < other.coords.size()) {
      if (j >= other.coords.size() ||
          (i < coords.size() && coords[i].first < other.coords[j].first)) {
        out.coords.push_back(coords[i++]);
      } else if (i >= coords.size() || other.coords[j].first < coords[i].first) {
        out.coords.push_back(other.coords[j++]);
      } else {
        int e = f.mul(coords[i].second, other.coords[j].second);
        if (e != 0) out.coords.emplace_back(coords[i].first, e);
        ++i;
        ++j;
      }
    }
    return out;
  }

  FSeqElement inverse(const FiniteGroup& f) const {
    FSeqElement out;
    out.coords.reserve(coords.size());
    for (const auto& [c, e] : coords) out.coords.emplace_back(c, f.inverse(e));
    return out;
  }

  FSeqElement shifted(int k) const {
    FSeqElement out;
    out.coords.reserve(coords.size());
    for (const auto& [c, e] : coords) out.coords.emplace_back(c + k, e);
    return out;
  }

  friend bool operator==(const FSeqElement& a, const FSeqElement& b) {
    return a.coords == b.coords;
  }
};

// Coordinatewise subgroup profile: a fixed left-tail subgroup below `lo`, an
// explicit window on [lo, lo+window.size()), the full group above.
struct TidyProfile {
  FiniteGroupPtr F;
  std::string name = "profile";
  SubgroupSet left_tail;
  int lo = 0;
  std::vector<SubgroupSet> window;

  int hi() const { return lo + static_cast<int>(window.size()); }

  SubgroupSet at(int m) const {
    if (m < lo) return left_tail;
    if (m >= hi()) return SubgroupSet::full(*F);
    return window[m - lo];
  }

  void validate() const {
    left_tail.validate(*F);
    for (const auto& s : window) s.validate(*F);
  }

  bool alpha_decreasing() const {
    for (int m = lo - 1; m <= hi(); ++m)
      if (!at(m - 1).subset_of(at(m))) return false;
    return true;
  }

  // h lies in the k-th shift of the profile
  bool member(const FSeqElement& h, int k) const {
    for (const auto& [m, e] : h.coords)
      if (!at(m - k).contains(e)) return false;
    return true;
  }

  static TidyProfile v0(FiniteGroupPtr f, const SubgroupSet& a) {
    TidyProfile p;
    p.F = std::move(f);
    p.name = "V0";
    p.left_tail = a;
    p.lo = 1;
    p.validate();
    return p;
  }

  // trivial left tail below -r, `sub` on [-r, 0), the full group above
  static TidyProfile tail_window(FiniteGroupPtr f, const SubgroupSet& sub, int r,
                                 const std::string& name) {
    if (r < 0) throw ValueError("window radius must be nonnegative");
    TidyProfile p;
    p.F = std::move(f);
    p.name = name;
    p.lo = -r;
    p.window.assign(r, sub);
    p.validate();
    return p;
  }
};

struct TidinessReport {
  bool alpha_decreasing = false;
  SubgroupSet vplus_coordinate;  // stabilized coordinate of the forward limit
  bool vminus_equals_profile = false;
  bool tidy = false;
  BigInt index_of_shift = 0;  // [shift^-1(V) : V] when decreasing
};

inline TidinessReport profile_tidiness(const TidyProfile& p) {
  TidinessReport rep;
  rep.alpha_decreasing = p.alpha_decreasing();
  SubgroupSet vplus = SubgroupSet::full(*p.F);
  for (int m = p.lo - 1; m <= p.hi(); ++m) vplus = vplus.intersect(p.at(m));
  rep.vplus_coordinate = vplus;
  rep.vminus_equals_profile = true;
  rep.tidy = true;
  for (int m = p.lo - 1; m <= p.hi(); ++m) {
    SubgroupSet vminus = SubgroupSet::full(*p.F);
    for (int j = m; j <= p.hi(); ++j) vminus = vminus.intersect(p.at(j));
    if (vminus != p.at(m)) rep.vminus_equals_profile = false;
    if (SubgroupSet(vplus.set_product(*p.F, vminus)) != p.at(m)) rep.tidy = false;
  }
  if (!rep.alpha_decreasing) {
    rep.tidy = false;
    return rep;
  }
  rep.index_of_shift = 1;
  for (int m = p.lo - 1; m <= p.hi(); ++m)
    rep.index_of_shift *= p.at(m + 1).order() / p.at(m).order();
  return rep;
}

// Transversal of profile/shift(profile): one representative per digit,
// assembled from per-coordinate representatives at the coordinates where the
// profile grows. Lower coordinates are less significant in the digit encoding.
struct ProfileTransversal {
  FiniteGroupPtr F;
  int q = 1;
  std::vector<int> coords;             // ascending difference coordinates
  std::vector<std::vector<int>> reps;  // per coordinate, identity first

  FSeqElement rep(int digit) const {
    if (digit < 0 || digit >= q) throw ValueError("digit out of range");
    FSeqElement out;
    for (std::size_t k = 0; k < coords.size(); ++k) {
      int radix = static_cast<int>(reps[k].size());
      int idx = digit % radix;
      digit /= radix;
      if (reps[k][idx] != 0)
        out = out.mul(*F, FSeqElement::single(coords[k], reps[k][idx]));
    }
    return out;
  }
};

inline ProfileTransversal profile_transversal(const TidyProfile& p) {
  if (!p.alpha_decreasing())
    throw ValueError("transversal needs a shift-decreasing profile");
  ProfileTransversal t;
  t.F = p.F;
  for (int m = p.lo - 1; m <= p.hi(); ++m) {
    SubgroupSet big = p.at(m), small = p.at(m - 1);
    if (big == small) continue;
    t.coords.push_back(m);
    t.reps.push_back(big.coset_reps(*p.F, small));
    t.q *= static_cast<int>(t.reps.back().size());
  }
  return t;
}

// ---------------------------------------------------------------------------
// Coset tree of a profile: the vertex at level l reached by digits d_1..d_k
// is the coset (product of shifted representatives) . shift^l(profile).
// Vertices are encoded as (level, digit word) via greedy digit extraction.

struct GfaAction {
  FiniteGroupPtr F;
  SubgroupSet A;
  TidyProfile profile;
  ProfileTransversal transversal;

  int q() const { return transversal.q; }

  // largest shift k <= level with h in shift^k(profile)
  int depth_of_membership(const FSeqElement& h, int level) const {
    int k = level;
    while (!profile.member(h, k)) --k;
    return k;
  }

  // canonical digits of the coset h . shift^level(profile)
  UnrootedVertex vertex_of(const FSeqElement& h, int level) const {
    int n = depth_of_membership(h, level);
    Digits out;
    FSeqElement r = h;
    for (int m = n; m < level; ++m) {
      bool found = false;
      for (int i = 0; i < q(); ++i) {
        FSeqElement next = transversal.rep(i).shifted(m).inverse(*F).mul(*F, r);
        if (profile.member(next, m + 1)) {
          out.push_back(static_cast<std::uint8_t>(i));
          r = std::move(next);
          found = true;
          break;
        }
      }
      if (!found) throw Error("internal: no transversal digit matched");
    }
    return UnrootedVertex(q(), level, std::move(out));
  }

  // group element representing the coset of v
  FSeqElement rep_of(const UnrootedVertex& v) const {
    FSeqElement g;
    int start = v.level - v.len();
    for (int k = 0; k < v.len(); ++k)
      g = g.mul(*F, transversal.rep(v.digits[k]).shifted(start + k));
    return g;
  }

  UnrootedVertex act(const FSeqElement& h, const UnrootedVertex& v) const {
    return vertex_of(h.mul(*F, rep_of(v)), v.level);
  }

  UnrootedVertex act_shift(int k, const UnrootedVertex& v) const {
    UnrootedVertex w = v;
    w.level += k;
    return w;
  }

  // how h renames the child digits of v
  Permutation local_permutation(const FSeqElement& h, const UnrootedVertex& v) const {
    FSeqElement lhs_base = h.mul(*F, rep_of(v));
    FSeqElement ri = rep_of(vertex_of(lhs_base, v.level));
    std::vector<int> im(q());
    for (int i = 0; i < q(); ++i) {
      FSeqElement lhs = lhs_base.mul(*F, transversal.rep(i).shifted(v.level));
      bool found = false;
      for (int ip = 0; ip < q(); ++ip) {
        FSeqElement rhs = ri.mul(*F, transversal.rep(ip).shifted(v.level));
        if (profile.member(rhs.inverse(*F).mul(*F, lhs), v.level + 1)) {
          im[i] = ip;
          found = true;
          break;
        }
      }
      if (!found) throw Error("internal: child image digit not found");
    }
    return Permutation(std::move(im));
  }
};

inline GfaAction make_gfa(FiniteGroupPtr f, const SubgroupSet& a) {
  a.validate(*f);
  if (a.order() == f->order()) throw ValueError("the subgroup must be proper");
  GfaAction act;
  act.F = f;
  act.A = a;
  act.profile = TidyProfile::v0(f, a);
  act.transversal = profile_transversal(act.profile);
  return act;
}

inline GfaAction make_gfa_with_profile(const TidyProfile& profile) {
  GfaAction act;
  act.F = profile.F;
  act.A = profile.left_tail;
  act.profile = profile;
  act.transversal = profile_transversal(act.profile);
  return act;
}

// ---------------------------------------------------------------------------
// Residue of a profile at depth d: the action of the profile group on the
// cosets of its d-th shift. The action factors through the coordinates where
// the two differ, so it is assembled exactly as a product of per-coordinate
// coset actions.

struct ResidueFactor {
  int coord = 0;
  std::string name;
  BigInt order = 0;
  int degree = 0;
  bool normal = false;  // shifted entry is normal in the profile entry
  GroupFingerprint fingerprint;
  PermGroup action = PermGroup::trivial(1);
};

struct ProfileResidueReport {
  int d = 0;
  BigInt order = 1;        // of the induced permutation group
  BigInt coset_count = 1;  // points acted on
  BigInt kernel_order = 1; // elements of the window group acting trivially
  BigInt group_size = 1;   // flattened window group size
  bool coordinatewise_normal = true;
  std::vector<ResidueFactor> factors;  // descending coordinate
  std::optional<PermGroup> flattened;  // on coset_count points when small
  GroupFingerprint fingerprint;        // of the flattened action when present
};

inline ProfileResidueReport profile_residue(const TidyProfile& p, int d) {
  if (d < 0) throw ValueError("residue depth must be nonnegative");
  const FiniteGroup& f = *p.F;
  ProfileResidueReport rep;
  rep.d = d;
  std::vector<ResidueFactor> ascending;
  for (int m = p.lo - 1; m <= p.hi() + d; ++m) {
    SubgroupSet big = p.at(m), small = p.at(m - d);
    if (big == small) continue;
    if (!small.subset_of(big))
      throw ValueError("profile is not decreasing under the shift");
    ResidueFactor fac;
    fac.coord = m;
    auto reps = big.coset_reps(f, small);
    fac.degree = static_cast<int>(reps.size());
    std::map<int, int> coset_index;
    for (std::size_t i = 0; i < reps.size(); ++i)
      for (int w : small.elems)
        coset_index[f.mul(reps[i], w)] = static_cast<int>(i);
    std::vector<Permutation> gens;
    for (int g : big.generating_set(f)) {
      std::vector<int> im(reps.size());
      for (std::size_t i = 0; i < reps.size(); ++i)
        im[i] = coset_index.at(f.mul(g, reps[i]));
      Permutation perm(std::move(im));
      if (!perm.is_identity()) gens.push_back(std::move(perm));
    }
    fac.action = PermGroup(fac.degree, gens);
    fac.fingerprint = fac.action.fingerprint();
    fac.order = fac.fingerprint.order;
    fac.name = identify_group(fac.fingerprint);
    SubgroupSet core = small;
    for (int g : big.elems) core = core.intersect(small.conjugate(f, g));
    fac.normal = core == small;
    rep.coordinatewise_normal = rep.coordinatewise_normal && fac.normal;
    rep.order *= fac.order;
    rep.coset_count *= fac.degree;
    rep.kernel_order *= core.order();
    rep.group_size *= big.order();
    ascending.push_back(std::move(fac));
  }
  // flattened action on the product of the coset spaces; lower coordinates
  // are less significant in the point encoding
  if (rep.coset_count <=
      BigInt(static_cast<unsigned long long>(limits().max_points))) {
    int total = static_cast<int>(rep.coset_count);
    std::vector<long long> weights;
    long long weight = 1;
    for (const auto& fac : ascending) {
      weights.push_back(weight);
      weight *= fac.degree;
    }
    std::vector<Permutation> flat_gens;
    for (std::size_t k = ascending.size(); k-- > 0;) {
      const auto& fac = ascending[k];
      long long w = weights[k];
      for (const auto& g : fac.action.generators()) {
        std::vector<int> im(total);
        for (int pt = 0; pt < total; ++pt) {
          int idx = static_cast<int>((pt / w) % fac.degree);
          im[pt] = pt + static_cast<int>((static_cast<long long>(g(idx)) - idx) * w);
        }
        flat_gens.emplace_back(std::move(im));
      }
    }
    rep.flattened = PermGroup(total, std::move(flat_gens));
    rep.fingerprint = rep.flattened->fingerprint();
  }
  for (std::size_t k = ascending.size(); k-- > 0;)
    rep.factors.push_back(std::move(ascending[k]));
  return rep;
}

}  // namespace scalelab
