#pragma once

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "scalelab/perm.hpp"
#include "scalelab/trees.hpp"

namespace scalelab {

// Finite-state description of rooted-tree automorphisms: each state carries a
// root permutation and one successor state per digit. State 0 is the identity
// state, named "1".
struct WreathRecursion {
  struct State {
    std::string name;
    Permutation root;
    std::vector<int> next;
  };

  int q = 2;
  std::vector<State> states;
  std::vector<int> generators;

  static WreathRecursion empty(int q) {
    WreathRecursion rec;
    rec.q = q;
    rec.states.push_back({"1", Permutation(q), std::vector<int>(q, 0)});
    return rec;
  }

  int add_state(const std::string& name, Permutation root, std::vector<int> next) {
    if (root.degree() != q) throw ValueError("state root permutation degree != q");
    if (static_cast<int>(next.size()) != q)
      throw ValueError("state transition arity != q");
    if (state_index(name))
      throw ValueError("duplicate state name '" + name + "'");
    states.push_back({name, std::move(root), std::move(next)});
    return static_cast<int>(states.size()) - 1;
  }

  std::optional<int> state_index(const std::string& name) const {
    for (std::size_t i = 0; i < states.size(); ++i)
      if (states[i].name == name) return static_cast<int>(i);
    return std::nullopt;
  }

  int require_state(const std::string& name) const {
    auto idx = state_index(name);
    if (!idx) throw ValueError("unknown state '" + name + "'");
    return *idx;
  }
};

// Word in the states of a recursion; exponents are +-1.
using GroupWord = std::vector<std::pair<int, int>>;

inline GroupWord word_of(std::initializer_list<std::pair<int, int>> letters) {
  return GroupWord(letters);
}

inline GroupWord invert_word(const GroupWord& w) {
  GroupWord out;
  out.reserve(w.size());
  for (auto it = w.rbegin(); it != w.rend(); ++it)
    out.emplace_back(it->first, -it->second);
  return out;
}

inline GroupWord concat_words(const GroupWord& a, const GroupWord& b) {
  GroupWord out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

namespace detail {

inline Digits evaluate_letter(const WreathRecursion& rec, int state, int exp,
                              const Digits& s) {
  Digits out(s.size());
  int cur = state;
  if (exp >= 0) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto& st = rec.states[cur];
      out[i] = static_cast<std::uint8_t>(st.root(s[i]));
      cur = st.next[s[i]];
    }
  } else {
    // inverse evaluation: invert the root permutation, then follow the
    // transition at the preimage digit
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto& st = rec.states[cur];
      int pre = st.root.inverse()(s[i]);
      out[i] = static_cast<std::uint8_t>(pre);
      cur = st.next[pre];
    }
  }
  return out;
}

inline int thread_state(const WreathRecursion& rec, int state, int exp,
                        const Digits& v) {
  int cur = state;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& st = rec.states[cur];
    int d = exp >= 0 ? v[i] : st.root.inverse()(v[i]);
    cur = st.next[d];
  }
  return cur;
}

}  // namespace detail

// Image of the digit string s under the word (letters applied right to left).
inline Digits evaluate(const WreathRecursion& rec, const GroupWord& w,
                       Digits s) {
  for (auto it = w.rbegin(); it != w.rend(); ++it)
    s = detail::evaluate_letter(rec, it->first, it->second, s);
  return s;
}

// Image of v together with the section word at v: evaluating the original
// word on v.s equals (image of v).(section evaluated on s).
inline std::pair<Digits, GroupWord> section_word(const WreathRecursion& rec,
                                                 const GroupWord& w,
                                                 const Digits& v) {
  GroupWord reversed_sections;
  Digits cur = v;
  for (auto it = w.rbegin(); it != w.rend(); ++it) {
    reversed_sections.emplace_back(
        detail::thread_state(rec, it->first, it->second, cur), it->second);
    cur = detail::evaluate_letter(rec, it->first, it->second, cur);
  }
  GroupWord sections(reversed_sections.rbegin(), reversed_sections.rend());
  return {cur, sections};
}

inline Permutation word_permutation(const WreathRecursion& rec,
                                    const GroupWord& w, int depth) {
  std::size_t n = 1;
  for (int i = 0; i < depth; ++i) {
    n *= rec.q;
    if (n > limits().max_points)
      throw LimitError("level size exceeds max_points");
  }
  std::vector<int> im(n);
  Digits s(depth, 0);
  for (std::size_t idx = 0; idx < n; ++idx) {
    std::size_t rem = idx;
    for (int pos = depth - 1; pos >= 0; --pos) {
      s[pos] = static_cast<std::uint8_t>(rem % rec.q);
      rem /= rec.q;
    }
    Digits t = evaluate(rec, w, s);
    std::size_t out = 0;
    for (int pos = 0; pos < depth; ++pos) out = out * rec.q + t[pos];
    im[idx] = static_cast<int>(out);
  }
  return Permutation(std::move(im));
}

// Finite permutation group induced on the depth-d level, with points the
// length-d strings in lexicographic order.
struct LevelQuotient {
  int depth;
  PermGroup group;
};

inline LevelQuotient level_quotient(const WreathRecursion& rec, int depth) {
  std::vector<Permutation> gens;
  gens.reserve(rec.generators.size());
  for (int s : rec.generators)
    gens.push_back(word_permutation(rec, {{s, 1}}, depth));
  std::size_t n = 1;
  for (int i = 0; i < depth; ++i) n *= rec.q;
  return LevelQuotient{depth, PermGroup(static_cast<int>(n), std::move(gens))};
}

// ---------------------------------------------------------------------------

struct SelfReplicatingReport {
  bool level1_transitive = false;
  std::vector<bool> surjective_at;  // per level-1 digit
  bool ok = false;
  std::string counterexample;  // first failing level-1 vertex, if any
};

// Exact check on the closure at finite depth: the group must act transitively
// on level 1, and for every level-1 vertex the sections of its stabilizer
// (Schreier generators inside the depth-(d+1) quotient) must induce the full
// depth-d quotient.
inline SelfReplicatingReport check_self_replicating(const WreathRecursion& rec,
                                                    int d) {
  SelfReplicatingReport rep;
  rep.surjective_at.assign(rec.q, false);
  LevelQuotient big = level_quotient(rec, d + 1);
  LevelQuotient small = level_quotient(rec, d);
  std::size_t block = 1;
  for (int i = 0; i < d; ++i) block *= rec.q;

  auto first_digit_image = [&](const Permutation& p, int digit) {
    return p(static_cast<int>(digit * block)) / static_cast<int>(block);
  };

  // transitivity on level 1
  std::vector<bool> seen(rec.q, false);
  std::vector<int> orbit{0};
  seen[0] = true;
  std::vector<int> tree_gen(rec.q, -1), tree_prev(rec.q, -1);
  const auto& gens = big.group.generators();
  for (std::size_t head = 0; head < orbit.size(); ++head)
    for (std::size_t gi = 0; gi < gens.size(); ++gi) {
      int to = first_digit_image(gens[gi], orbit[head]);
      if (!seen[to]) {
        seen[to] = true;
        tree_gen[to] = static_cast<int>(gi);
        tree_prev[to] = orbit[head];
        orbit.push_back(to);
      }
    }
  rep.level1_transitive = orbit.size() == static_cast<std::size_t>(rec.q);
  if (!rep.level1_transitive) {
    rep.ok = false;
    for (int i = 0; i < rec.q; ++i)
      if (!seen[i]) {
        rep.counterexample = UnrootedVertex(rec.q, 1, {static_cast<std::uint8_t>(i)})
                                 .to_string();
        break;
      }
    return rep;
  }

  std::vector<Permutation> to_block(rec.q, Permutation(big.group.degree()));
  for (int j : orbit) {
    std::vector<int> path_gens;
    for (int x = j; x != 0; x = tree_prev[x]) path_gens.push_back(tree_gen[x]);
    Permutation t(big.group.degree());
    for (auto it = path_gens.rbegin(); it != path_gens.rend(); ++it)
      t = compose(gens[*it], t);
    to_block[j] = std::move(t);
  }

  rep.ok = true;
  for (int digit = 0; digit < rec.q; ++digit) {
    // Schreier generators of the stabilizer of the level-1 vertex `digit`,
    // restricted to the subtree below it
    Permutation from_digit = to_block[digit].inverse();
    std::set<Permutation> restrictions;
    for (int j : orbit) {
      Permutation move_digit_to_j = compose(to_block[j], from_digit);
      for (const auto& g : gens) {
        int gj = first_digit_image(g, j);
        Permutation back = compose(to_block[gj], from_digit);
        Permutation schreier =
            compose(back.inverse(), compose(g, move_digit_to_j));
        if (first_digit_image(schreier, digit) != digit)
          throw Error("internal: Schreier generator moves its block");
        std::vector<int> im(block);
        for (std::size_t x = 0; x < block; ++x)
          im[x] = schreier(static_cast<int>(digit * block + x)) -
                  static_cast<int>(digit * block);
        Permutation restr(std::move(im));
        if (!restr.is_identity()) restrictions.insert(std::move(restr));
      }
    }
    PermGroup generated(
        static_cast<int>(block),
        std::vector<Permutation>(restrictions.begin(), restrictions.end()));
    bool good = generated.order() == small.group.order();
    for (const auto& r : restrictions)
      if (!small.group.contains(r)) {
        good = false;
        break;
      }
    rep.surjective_at[digit] = good;
    if (!good) {
      rep.ok = false;
      if (rep.counterexample.empty())
        rep.counterexample =
            UnrootedVertex(rec.q, 1, {static_cast<std::uint8_t>(digit)}).to_string();
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// built-in recursions

inline Permutation cycle_permutation(int q) {
  std::vector<int> im(q);
  for (int i = 0; i < q; ++i) im[i] = (i + 1) % q;
  return Permutation(std::move(im));
}

inline WreathRecursion builtin_odometer(int q) {
  WreathRecursion rec = WreathRecursion::empty(q);
  std::vector<int> next(q, 0);
  next[q - 1] = 1;  // carry continues through the top digit
  rec.add_state("a", cycle_permutation(q), next);
  rec.generators = {1};
  return rec;
}

inline WreathRecursion builtin_grigorchuk() {
  WreathRecursion rec = WreathRecursion::empty(2);
  int a = rec.add_state("a", parse_cycles("(0 1)", 2), {0, 0});
  int b = rec.add_state("b", Permutation(2), {0, 0});
  int c = rec.add_state("c", Permutation(2), {0, 0});
  int d = rec.add_state("d", Permutation(2), {0, 0});
  rec.states[b].next = {a, c};
  rec.states[c].next = {a, d};
  rec.states[d].next = {0, b};
  rec.generators = {a, b, c, d};
  return rec;
}

inline WreathRecursion builtin_gupta_sidki() {
  WreathRecursion rec = WreathRecursion::empty(3);
  int a = rec.add_state("a", cycle_permutation(3), {0, 0, 0});
  int ai = rec.add_state("ai", cycle_permutation(3).inverse(), {0, 0, 0});
  int t = rec.add_state("t", Permutation(3), {0, 0, 0});
  rec.states[t].next = {a, ai, t};
  rec.generators = {a, t};
  return rec;
}

// Root generators for a generating set of the symmetric group plus a state
// that recurses along the spine and plants those generators one level down.
// Its closure acts as the full isometry group of the rooted tree.
inline WreathRecursion builtin_full_sym_level(int q) {
  WreathRecursion rec = WreathRecursion::empty(q);
  int rt = rec.add_state("rt", parse_cycles("(0 1)", q), std::vector<int>(q, 0));
  int rc = rt;
  if (q > 2) rc = rec.add_state("rc", cycle_permutation(q), std::vector<int>(q, 0));
  std::vector<int> next(q, 0);
  next[0] = static_cast<int>(rec.states.size());  // the new state itself
  next[1] = rt;
  if (q > 2) next[2] = rc;
  int m = rec.add_state("m", Permutation(q), next);
  rec.generators = q > 2 ? std::vector<int>{rt, rc, m} : std::vector<int>{rt, m};
  return rec;
}

inline WreathRecursion builtin_recursion(const std::string& name) {
  auto paren = name.find('(');
  if (paren != std::string::npos) {
    if (name.back() != ')') throw ValueError("malformed builtin name: " + name);
    std::string head = name.substr(0, paren);
    int arg = std::stoi(name.substr(paren + 1, name.size() - paren - 2));
    if (arg < 2) throw ValueError("builtin alphabet must be at least 2");
    if (head == "odometer") return builtin_odometer(arg);
    if (head == "full_sym_level") return builtin_full_sym_level(arg);
    throw ValueError("unknown builtin '" + name + "'");
  }
  if (name == "grigorchuk") return builtin_grigorchuk();
  if (name == "gupta_sidki_3") return builtin_gupta_sidki();
  throw ValueError("unknown builtin '" + name + "'");
}

// ---------------------------------------------------------------------------
// automaton spec files
//
//   alphabet 2
//   state a perm (0 1) -> 1 1
//   state b perm () -> a c
//   generators a b c d

inline WreathRecursion parse_automaton(std::istream& in) {
  std::optional<WreathRecursion> rec;
  struct Pending {
    std::string name;
    Permutation root;
    std::vector<std::string> next_names;
    int line;
  };
  std::vector<Pending> pending;
  std::vector<std::string> generator_names;
  bool saw_generators = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string stripped = line.substr(0, line.find('#'));
    std::istringstream ls(stripped);
    std::string head;
    if (!(ls >> head)) continue;
    if (head == "alphabet") {
      int q;
      if (!(ls >> q) || q < 2) throw ParseError("bad alphabet size", line_no);
      if (rec) throw ParseError("duplicate alphabet line", line_no);
      rec = WreathRecursion::empty(q);
    } else if (head == "state") {
      if (!rec) throw ParseError("state before alphabet", line_no);
      std::string name, kw;
      if (!(ls >> name >> kw) || kw != "perm")
        throw ParseError("expected 'state <name> perm <cycles> -> <targets>'", line_no);
      std::string rest;
      std::getline(ls, rest);
      auto arrow = rest.find("->");
      if (arrow == std::string::npos) throw ParseError("missing '->'", line_no);
      Permutation root(rec->q);
      try {
        root = parse_cycles(rest.substr(0, arrow), rec->q);
      } catch (const Error& e) {
        throw ParseError(e.what(), line_no);
      }
      std::istringstream ts(rest.substr(arrow + 2));
      std::vector<std::string> targets;
      std::string t;
      while (ts >> t) targets.push_back(t);
      if (static_cast<int>(targets.size()) != rec->q)
        throw ParseError("expected " + std::to_string(rec->q) + " transitions, got " +
                             std::to_string(targets.size()),
                         line_no);
      if (name == "1") throw ParseError("state name '1' is reserved", line_no);
      pending.push_back({name, std::move(root), std::move(targets), line_no});
    } else if (head == "generators") {
      if (!rec) throw ParseError("generators before alphabet", line_no);
      std::string g;
      while (ls >> g) generator_names.push_back(g);
      saw_generators = true;
    } else {
      throw ParseError("unknown directive '" + head + "'", line_no);
    }
  }
  if (!rec) throw ParseError("missing alphabet line", 0);
  if (!saw_generators) throw ParseError("missing generators line", 0);
  for (const auto& p : pending)
    rec->add_state(p.name, p.root, std::vector<int>(rec->q, 0));
  for (const auto& p : pending) {
    std::vector<int> next;
    for (const auto& tn : p.next_names) {
      auto idx = rec->state_index(tn);
      if (!idx) throw ParseError("undeclared state '" + tn + "'", p.line);
      next.push_back(*idx);
    }
    rec->states[*rec->state_index(p.name)].next = std::move(next);
  }
  rec->generators.clear();
  for (const auto& g : generator_names) {
    auto idx = rec->state_index(g);
    if (!idx) throw ParseError("undeclared generator state '" + g + "'", 0);
    rec->generators.push_back(*idx);
  }
  return std::move(*rec);
}

inline std::string serialize_automaton(const WreathRecursion& rec) {
  std::ostringstream os;
  os << "alphabet " << rec.q << "\n";
  for (std::size_t i = 1; i < rec.states.size(); ++i) {
    const auto& st = rec.states[i];
    os << "state " << st.name << " perm " << st.root.to_cycle_string() << " ->";
    for (int t : st.next) os << ' ' << rec.states[t].name;
    os << "\n";
  }
  os << "generators";
  for (int g : rec.generators) os << ' ' << rec.states[g].name;
  os << "\n";
  return os.str();
}

}  // namespace scalelab
