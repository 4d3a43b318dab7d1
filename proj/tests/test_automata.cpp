#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>
#include <unordered_set>

#include "scalelab/automata.hpp"

using namespace scalelab;

namespace {

Digits str(std::initializer_list<int> ds) {
  Digits d;
  for (int x : ds) d.push_back(static_cast<std::uint8_t>(x));
  return d;
}

std::size_t closure_size(const std::vector<Permutation>& gens, int degree,
                         std::size_t cap = 100000) {
  std::unordered_set<Permutation, Permutation::Hash> seen{Permutation(degree)};
  std::vector<Permutation> work(seen.begin(), seen.end());
  for (std::size_t head = 0; head < work.size(); ++head)
    for (const auto& g : gens) {
      Permutation n = compose(g, work[head]);
      if (seen.insert(n).second) {
        REQUIRE(seen.size() <= cap);
        work.push_back(n);
      }
    }
  return seen.size();
}

GroupWord random_word(const WreathRecursion& rec, std::mt19937& rng, int len) {
  GroupWord w;
  for (int i = 0; i < len; ++i)
    w.emplace_back(rec.generators[rng() % rec.generators.size()],
                   rng() % 2 ? 1 : -1);
  return w;
}

WreathRecursion root_swap() {
  WreathRecursion rec = WreathRecursion::empty(2);
  rec.add_state("r", parse_cycles("(0 1)", 2), {0, 0});
  rec.generators = {1};
  return rec;
}

}  // namespace

TEST_CASE("word evaluation") {
  WreathRecursion grig = builtin_grigorchuk();
  int b = grig.require_state("b");
  CHECK(evaluate(grig, {{b, 1}}, str({0, 1, 1})) == str({0, 0, 1}));

  WreathRecursion odo = builtin_odometer(2);
  int a = odo.require_state("a");
  CHECK(evaluate(odo, {{a, 1}}, str({1, 1})) == str({0, 0}));
  CHECK(evaluate(odo, {{a, 1}}, str({0, 1})) == str({1, 1}));

  CHECK(evaluate(grig, {}, str({1, 0, 1})) == str({1, 0, 1}));
}

TEST_CASE("inverse evaluation undoes evaluation") {
  std::mt19937 rng(11);
  for (const char* name : {"odometer(3)", "grigorchuk", "gupta_sidki_3"}) {
    WreathRecursion rec = builtin_recursion(name);
    for (int t = 0; t < 10; ++t) {
      GroupWord w = random_word(rec, rng, 1 + rng() % 4);
      Digits s;
      for (int i = 0; i < 5; ++i)
        s.push_back(static_cast<std::uint8_t>(rng() % rec.q));
      CHECK(evaluate(rec, invert_word(w), evaluate(rec, w, s)) == s);
    }
  }
}

TEST_CASE("sections") {
  WreathRecursion grig = builtin_grigorchuk();
  int a = grig.require_state("a");
  int b = grig.require_state("b");
  auto [img, sec] = section_word(grig, {{b, 1}}, str({0}));
  CHECK(img == str({0}));
  REQUIRE(sec.size() == 1);
  CHECK(sec[0] == std::make_pair(a, 1));

  auto [img2, sec2] = section_word(grig, {{b, 1}}, {});
  CHECK(img2.empty());
  CHECK(sec2 == GroupWord{{b, 1}});

  WreathRecursion odo = builtin_odometer(2);
  int ao = odo.require_state("a");
  auto [img3, sec3] = section_word(odo, {{ao, 1}}, str({1}));
  CHECK(img3 == str({0}));
  CHECK(sec3 == GroupWord{{ao, 1}});
}

TEST_CASE("section identity for builtin recursions") {
  std::mt19937 rng(12);
  for (const char* name :
       {"odometer(2)", "odometer(3)", "grigorchuk", "gupta_sidki_3",
        "full_sym_level(3)"}) {
    WreathRecursion rec = builtin_recursion(name);
    for (int t = 0; t < 8; ++t) {
      GroupWord w = random_word(rec, rng, 1 + rng() % 3);
      Digits v;
      for (int i = 0, n = 1 + rng() % 3; i < n; ++i)
        v.push_back(static_cast<std::uint8_t>(rng() % rec.q));
      auto [img, sec] = section_word(rec, w, v);
      for (int s = 0; s < 6; ++s) {
        Digits tail;
        for (int i = 0, n = rng() % 3; i < n; ++i)
          tail.push_back(static_cast<std::uint8_t>(rng() % rec.q));
        Digits joined = v;
        joined.insert(joined.end(), tail.begin(), tail.end());
        Digits expect = img;
        Digits stail = evaluate(rec, sec, tail);
        expect.insert(expect.end(), stail.begin(), stail.end());
        CHECK(evaluate(rec, w, joined) == expect);
      }
    }
  }
}

TEST_CASE("level quotients") {
  WreathRecursion odo = builtin_odometer(2);
  LevelQuotient q3 = level_quotient(odo, 3);
  CHECK(q3.group.degree() == 8);
  CHECK(q3.group.order() == 8);
  CHECK(q3.group.is_transitive());
  CHECK(closure_size(q3.group.generators(), 8) == 8);

  WreathRecursion idonly = WreathRecursion::empty(2);
  idonly.generators = {0};
  CHECK(level_quotient(idonly, 3).group.order() == 1);

  WreathRecursion grig = builtin_grigorchuk();
  CHECK(level_quotient(grig, 1).group.order() == 2);
}

TEST_CASE("grigorchuk quotient orders against the closure oracle") {
  WreathRecursion grig = builtin_grigorchuk();
  const BigInt expected[] = {2, 8, 128, 4096};
  for (int d = 1; d <= 4; ++d) {
    LevelQuotient lq = level_quotient(grig, d);
    BigInt order = lq.group.order();
    CHECK(order == expected[d - 1]);
    CHECK(closure_size(lq.group.generators(), lq.group.degree()) ==
          static_cast<std::size_t>(order));
  }
}

TEST_CASE("quotients are compatible across depths") {
  for (const char* name : {"odometer(3)", "grigorchuk", "gupta_sidki_3"}) {
    WreathRecursion rec = builtin_recursion(name);
    std::mt19937 rng(13);
    for (int t = 0; t < 8; ++t) {
      GroupWord w = random_word(rec, rng, 1 + rng() % 4);
      Permutation deep = word_permutation(rec, w, 3);
      Permutation shallow = word_permutation(rec, w, 2);
      // the depth-2 action is the first-digits part of the depth-3 action
      for (int x = 0; x < shallow.degree(); ++x)
        CHECK(deep(x * rec.q) / rec.q == shallow(x));
    }
  }
}

TEST_CASE("self-replication check") {
  CHECK(check_self_replicating(builtin_odometer(2), 4).ok);
  CHECK(check_self_replicating(builtin_odometer(3), 3).ok);
  CHECK(check_self_replicating(builtin_grigorchuk(), 3).ok);
  CHECK(check_self_replicating(builtin_gupta_sidki(), 2).ok);
  CHECK(check_self_replicating(builtin_full_sym_level(2), 3).ok);
  CHECK(check_self_replicating(builtin_full_sym_level(3), 2).ok);

  SelfReplicatingReport bad = check_self_replicating(root_swap(), 2);
  CHECK(bad.level1_transitive);
  CHECK_FALSE(bad.ok);
  CHECK_FALSE(bad.surjective_at[0]);
  CHECK_FALSE(bad.surjective_at[1]);
  CHECK(bad.counterexample == "1:");  // the spine child is the first vertex checked
}

TEST_CASE("builtin recursions") {
  CHECK(builtin_grigorchuk().states.size() == 5);
  CHECK(builtin_odometer(2).states.size() == 2);
  CHECK(builtin_gupta_sidki().q == 3);
  CHECK(builtin_recursion("odometer(4)").q == 4);
  CHECK_THROWS_AS(builtin_recursion("nope"), ValueError);
  CHECK_THROWS_AS(builtin_recursion("odometer(1)"), ValueError);
}

TEST_CASE("automaton files") {
  std::string text =
      "alphabet 2\n"
      "state a perm (0 1) -> 1 1\n"
      "state b perm () -> a c\n"
      "state c perm () -> a d\n"
      "state d perm () -> 1 b\n"
      "generators a b c d\n";
  std::istringstream in(text);
  WreathRecursion rec = parse_automaton(in);
  CHECK(rec.q == 2);
  CHECK(rec.states.size() == 5);
  CHECK(rec.generators.size() == 4);
  // same group as the builtin at small depths
  for (int d = 1; d <= 3; ++d)
    CHECK(level_quotient(rec, d).group.order() ==
          level_quotient(builtin_grigorchuk(), d).group.order());

  // serialization round trip
  std::istringstream again(serialize_automaton(rec));
  WreathRecursion rec2 = parse_automaton(again);
  CHECK(serialize_automaton(rec2) == serialize_automaton(rec));

  auto expect_error = [](const std::string& body) {
    std::istringstream bad(body);
    CHECK_THROWS_AS(parse_automaton(bad), ParseError);
  };
  expect_error("state a perm (0 1) -> 1 1\ngenerators a\n");  // no alphabet
  expect_error("alphabet 2\nstate a perm (0 1) -> 1\ngenerators a\n");
  expect_error("alphabet 2\nstate a perm (0 1) -> 1 zz\ngenerators a\n");
  expect_error("alphabet 2\nstate a perm (0 1) -> 1 1\ngenerators a b\n");
  expect_error("alphabet 2\nstate a perm (0 3) -> 1 1\ngenerators a\n");
  expect_error("alphabet 2\nfoo\n");
}
