#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "scalelab/automata.hpp"
#include "scalelab/portraits.hpp"
#include "scalelab/trees.hpp"

namespace scalelab {

// p-adic number known modulo p^(floor_exp + digits.size()). When `exact` is
// set the value is exactly the finite digit expansion (an element of Z[1/p]).
// Operations never round silently: results are exact, carry an explicit
// precision, or the operation throws.
struct PAdicNumber {
  int p = 2;
  int floor_exp = 0;
  std::vector<int> digits;  // digit i sits at exponent floor_exp + i
  bool exact = false;

  static constexpr int kInfinitePrecision = 1 << 28;

  int known_mod() const {
    return exact ? kInfinitePrecision
                 : floor_exp + static_cast<int>(digits.size());
  }

  int digit(int exp) const {
    int k = exp - floor_exp;
    if (k < 0) return 0;
    if (k >= static_cast<int>(digits.size())) {
      if (!exact) throw ValueError("digit beyond known precision");
      return 0;
    }
    return digits[k];
  }

  static PAdicNumber exact_int(int p, long long v) {
    if (v < 0) throw ValueError("exact_int takes nonnegative values");
    PAdicNumber x;
    x.p = p;
    x.exact = true;
    while (v) {
      x.digits.push_back(static_cast<int>(v % p));
      v /= p;
    }
    return x;
  }

  static PAdicNumber window(int p, int floor_exp, std::vector<int> digits) {
    PAdicNumber x;
    x.p = p;
    x.floor_exp = floor_exp;
    x.digits = std::move(digits);
    for (int d : x.digits)
      if (d < 0 || d >= p) throw ValueError("digit out of range");
    return x;
  }

  // valuation within the known window; nullopt when every known digit is zero
  std::optional<int> valuation() const {
    for (std::size_t i = 0; i < digits.size(); ++i)
      if (digits[i]) return floor_exp + static_cast<int>(i);
    return std::nullopt;
  }

  bool is_unit() const {
    auto v = valuation();
    return v && *v == 0;
  }

  // digits below p^k, as a plain window
  PAdicNumber truncated(int k) const {
    if (known_mod() < k) throw ValueError("insufficient precision to truncate");
    PAdicNumber out;
    out.p = p;
    out.floor_exp = floor_exp;
    for (int e = floor_exp; e < k; ++e) out.digits.push_back(digit(e));
    return out;
  }
};

inline PAdicNumber padd(const PAdicNumber& a, const PAdicNumber& b) {
  if (a.p != b.p) throw ValueError("prime mismatch");
  PAdicNumber out;
  out.p = a.p;
  out.exact = a.exact && b.exact;
  out.floor_exp = std::min(a.floor_exp, b.floor_exp);
  long long top;
  if (out.exact)
    top = std::max(a.floor_exp + static_cast<long long>(a.digits.size()),
                   b.floor_exp + static_cast<long long>(b.digits.size()));
  else
    top = std::min(a.known_mod(), b.known_mod());
  int carry = 0;
  for (long long e = out.floor_exp; e < top; ++e) {
    int s = a.digit(static_cast<int>(e)) + b.digit(static_cast<int>(e)) + carry;
    out.digits.push_back(s % a.p);
    carry = s / a.p;
  }
  if (out.exact && carry) out.digits.push_back(carry);
  if (out.exact)
    while (!out.digits.empty() && out.digits.back() == 0) out.digits.pop_back();
  return out;
}

inline PAdicNumber pmul(const PAdicNumber& a, const PAdicNumber& b) {
  if (a.p != b.p) throw ValueError("prime mismatch");
  PAdicNumber out;
  out.p = a.p;
  out.exact = a.exact && b.exact;
  out.floor_exp = a.floor_exp + b.floor_exp;
  long long top;
  if (out.exact)
    top = out.floor_exp + static_cast<long long>(a.digits.size()) +
          static_cast<long long>(b.digits.size());
  else
    // the unknown tail of either factor scales by the floor of the other
    top = std::min(static_cast<long long>(a.known_mod()) + b.floor_exp,
                   static_cast<long long>(b.known_mod()) + a.floor_exp);
  long long width = std::max<long long>(top - out.floor_exp, 0);
  std::vector<long long> acc(width, 0);
  for (std::size_t i = 0; i < a.digits.size(); ++i)
    for (std::size_t j = 0; j < b.digits.size(); ++j) {
      long long e = static_cast<long long>(i) + j;
      if (e < width) acc[e] += static_cast<long long>(a.digits[i]) * b.digits[j];
    }
  long long carry = 0;
  for (long long k = 0; k < width; ++k) {
    long long s = acc[k] + carry;
    out.digits.push_back(static_cast<int>(s % a.p));
    carry = s / a.p;
  }
  if (out.exact) {
    while (carry) {
      out.digits.push_back(static_cast<int>(carry % a.p));
      carry /= a.p;
    }
    while (!out.digits.empty() && out.digits.back() == 0) out.digits.pop_back();
  }
  return out;
}

// inverse of a unit, modulo p^k
inline PAdicNumber punit_inverse(const PAdicNumber& a, int k) {
  if (!a.is_unit()) throw ValueError("inverse requires a unit");
  if (a.known_mod() < k) throw ValueError("insufficient precision for inverse");
  int p = a.p;
  int inv0 = -1;
  for (int c = 1; c < p; ++c)
    if ((a.digit(0) * c) % p == 1) inv0 = c;
  std::vector<int> x(k, 0);
  std::vector<long long> r(k, 0);  // residual 1 - a*x, lazily carried
  r[0] = 1;
  for (int i = 0; i < k; ++i) {
    long long v = ((r[i] % p) + p) % p;
    if (i + 1 < k) r[i + 1] += (r[i] - v) / p;
    r[i] = v;
    int xi = static_cast<int>((v * inv0) % p);
    x[i] = xi;
    if (xi) {
      for (int e = i; e < k; ++e)
        r[e] -= static_cast<long long>(a.digit(e - i)) * xi;
      // digit i is now an exact multiple of p
      if (i + 1 < k) r[i + 1] += r[i] / p;
      r[i] = 0;
    }
  }
  return PAdicNumber::window(p, 0, std::move(x));
}

// literal "d_k ... d1 d0 . d-1 ... d-m @p", digits most significant first
inline PAdicNumber parse_padic(const std::string& text) {
  auto at = text.find('@');
  if (at == std::string::npos) throw ParseError("missing @p suffix");
  int p;
  try {
    p = std::stoi(text.substr(at + 1));
  } catch (const std::exception&) {
    throw ParseError("bad prime in p-adic literal");
  }
  if (p < 2) throw ParseError("bad prime in p-adic literal");
  std::string body = text.substr(0, at);
  auto dot = body.find('.');
  std::string ipart = dot == std::string::npos ? body : body.substr(0, dot);
  std::string fpart = dot == std::string::npos ? "" : body.substr(dot + 1);
  PAdicNumber x;
  x.p = p;
  x.exact = true;
  x.floor_exp = -static_cast<int>(fpart.size());
  std::string all = ipart + fpart;  // most significant first
  for (auto it = all.rbegin(); it != all.rend(); ++it) {
    if (*it < '0' || *it - '0' >= p) throw ParseError("bad p-adic digit");
    x.digits.push_back(*it - '0');
  }
  while (!x.digits.empty() && x.digits.back() == 0) x.digits.pop_back();
  if (x.digits.empty()) x.floor_exp = 0;
  return x;
}

// ---------------------------------------------------------------------------
// Vertices of the (p+1)-regular tree are cosets y + p^(n+1) Z_p, identified
// with the level-n digit strings of y. The affine map (b, a) sends such a
// coset to (b + a y) + a p^(n+1) Z_p.

struct AffineMap {
  PAdicNumber b;
  PAdicNumber a_unit;  // unit part of a
  int a_val = 0;       // a = a_unit * p^a_val
  std::string name;
};

inline PAdicNumber vertex_value(const UnrootedVertex& v) {
  PAdicNumber y;
  y.p = v.q;
  y.exact = true;
  y.floor_exp = v.len() ? v.level - v.len() + 1 : 0;
  for (int i = 0; i < v.len(); ++i) y.digits.push_back(v.digits[i]);
  return y;
}

inline UnrootedVertex affine_act(const AffineMap& m, const UnrootedVertex& v) {
  int p = v.q;
  if (m.b.p != p || m.a_unit.p != p) throw ValueError("prime mismatch");
  if (!m.a_unit.is_unit()) throw ValueError("affine map needs a unit part");
  int out_level = v.level + m.a_val;
  int need = out_level + 1;
  PAdicNumber ay = pmul(m.a_unit, vertex_value(v));
  ay.floor_exp += m.a_val;
  PAdicNumber sum = padd(m.b, ay);
  if (sum.known_mod() < need)
    throw ValueError("insufficient precision for affine action at level " +
                     std::to_string(out_level));
  Digits digits;
  int start = std::min(sum.floor_exp, need);
  for (int e = start; e < need; ++e)
    digits.push_back(static_cast<std::uint8_t>(sum.digit(e)));
  return UnrootedVertex(p, out_level, std::move(digits));
}

// Horosphere-uniform labelling: out-edges of a vertex on horosphere n-1 carry
// labels (b^-n * j) mod p. The unit b pins which affine subgroup preserves
// the labelling; b = 1 gives the standard labelling.
inline EdgeLabelling label_edges(int p, int b, const TreeWindow& win) {
  if (((b % p) + p) % p == 0)
    throw ValueError("label parameter must be a unit");
  int bmod = ((b % p) + p) % p;
  int binv = -1;
  for (int c = 1; c < p; ++c)
    if ((bmod * c) % p == 1) binv = c;
  EdgeLabelling out;
  out.q = p;
  for (int lvl = -win.R; lvl < win.D; ++lvl) {
    int n = lvl + 1;
    long long factor = 1;
    int base = n >= 0 ? binv : bmod;
    for (int i = 0; i < (n >= 0 ? n : -n); ++i) factor = (factor * base) % p;
    std::vector<std::uint8_t> labels(p);
    for (int j = 0; j < p; ++j)
      labels[j] = static_cast<std::uint8_t>((factor * j) % p);
    for (const auto& v : win.vertices_at_level(lvl)) out.set(v, labels);
  }
  return out;
}

struct OdometerExtract {
  RootedPortrait generator;
  BigInt quotient_order = 0;
  bool regular = false;
  bool matches_builtin = false;
};

// Section of the translation-by-one at the basepoint's parent (which it
// fixes), truncated at depth d and compared against the adding machine.
inline OdometerExtract odometer_extract(int p, int d) {
  AffineMap plus_one{PAdicNumber::exact_int(p, 1), PAdicNumber::exact_int(p, 1),
                     0, "(1,1)"};
  UnrootedVertex root = UnrootedVertex::spine(p, -1);
  if (affine_act(plus_one, root) != root)
    throw Error("internal: translation by one moves the subtree root");
  OdometerExtract out;
  out.generator.q = p;
  out.generator.depth_valid = d;
  // read local permutations below the fixed root from the action
  std::vector<Digits> prefixes{{}};
  for (std::size_t head = 0; head < prefixes.size(); ++head) {
    Digits u = prefixes[head];
    if (static_cast<int>(u.size()) >= d) continue;
    std::vector<int> im(p);
    for (int j = 0; j < p; ++j) {
      Digits uj = u;
      uj.push_back(static_cast<std::uint8_t>(j));
      UnrootedVertex w = affine_act(plus_one, subtree_iso_inv(root, uj));
      im[j] = subtree_iso(root, w).back();
    }
    Permutation pi(std::move(im));
    if (!pi.is_identity()) out.generator.local.emplace(u, pi);
    for (int j = 0; j < p; ++j) {
      Digits uj = u;
      uj.push_back(static_cast<std::uint8_t>(j));
      prefixes.push_back(std::move(uj));
    }
  }
  if (d == 0) {
    out.quotient_order = 1;
    out.regular = true;
    out.matches_builtin = true;
    return out;
  }
  Permutation mine = out.generator.level_permutation(d);
  PermGroup generated(mine.degree(), {mine});
  out.quotient_order = generated.order();
  out.regular = generated.is_transitive() &&
                out.quotient_order == BigInt(generated.degree());
  WreathRecursion odo = builtin_odometer(p);
  Permutation reference = word_permutation(odo, {{1, 1}}, d);
  out.matches_builtin = mine == reference;
  return out;
}

}  // namespace scalelab
