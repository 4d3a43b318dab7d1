#include <catch2/catch_amalgamated.hpp>

#include "scalelab/corr.hpp"
#include "scalelab/gfa.hpp"
#include "scalelab/padic.hpp"

using namespace scalelab;

namespace {

UnrootedVertex vx(int q, int level, std::initializer_list<int> ds) {
  Digits d;
  for (int x : ds) d.push_back(static_cast<std::uint8_t>(x));
  return UnrootedVertex(q, level, std::move(d));
}

// transversal movers for a scale-group datum: x_0 is the spine translation,
// x_i composes a word whose section at the basepoint's parent appends i
std::vector<Mover> builtin_transversal(std::shared_ptr<const ScaleGroupData> data) {
  const WreathRecursion& rec = data->rec;
  std::vector<Mover> out;
  auto add = [&](GroupWord w) {
    out.push_back(scale_mover(
        data, ScaleElement{"x" + std::to_string(out.size()), 1, std::move(w)}));
  };
  REQUIRE(data->R == 1);
  // with anchor radius one, the elliptic part only needs to turn the top
  // digit of the anchored subtree from 0 to i
  std::vector<std::string> names;
  for (const auto& st : rec.states) names.push_back(st.name);
  if (std::find(names.begin(), names.end(), "rc") != names.end() ||
      std::find(names.begin(), names.end(), "rt") != names.end()) {
    // root generators: the full cycle reaches every digit
    int cyc = rec.q > 2 ? rec.require_state("rc") : rec.require_state("rt");
    for (int i = 0; i < rec.q; ++i)
      add(GroupWord(i, {cyc, 1}));
  } else if (rec.state_index("a") && !rec.state_index("t") &&
             !rec.state_index("b")) {
    // adding machine: powers of the generator
    int a = rec.require_state("a");
    for (int i = 0; i < rec.q; ++i) add(GroupWord(i, {a, 1}));
  } else if (rec.state_index("b")) {
    // first Grigorchuk recursion: a flips the top digit
    int a = rec.require_state("a");
    add({});
    add({{a, 1}});
  } else {
    // Gupta-Sidki: the rooted cycle
    int a = rec.require_state("a");
    for (int i = 0; i < rec.q; ++i) add(GroupWord(i, {a, 1}));
  }
  return out;
}

}  // namespace

TEST_CASE("scale group data validation") {
  CHECK_NOTHROW(make_scale_group(builtin_odometer(2), 1, 4));
  WreathRecursion bad = WreathRecursion::empty(2);
  bad.add_state("r", parse_cycles("(0 1)", 2), {0, 0});
  bad.generators = {1};
  CHECK_THROWS_AS(make_scale_group(bad, 1, 2), ValueError);
  CHECK_THROWS_AS(make_scale_group(builtin_odometer(2), 0, 2), ValueError);
}

TEST_CASE("applying scale elements") {
  auto data = make_scale_group(builtin_odometer(2), 1, 4);
  ScaleElement x0{"x0", 1, {}};
  ScaleElement a{"a", 0, {{data->rec.require_state("a"), 1}}};
  ScaleElement id{"1", 0, {}};

  // pure translation
  for (const auto& v : data->window().vertices_at_level(2))
    CHECK(scale_apply(*data, x0, v) == x0_translate(v, 1));

  // identity word
  for (const auto& v : data->window().vertices_at_level(1))
    CHECK(scale_apply(*data, id, v) == v);

  // the adding machine introduces the first nonzero digit on the spine
  CHECK(scale_apply(*data, a, UnrootedVertex::spine(2, 0)) == vx(2, 0, {1}));
  CHECK(scale_apply(*data, a, UnrootedVertex::spine(2, 2)) ==
        UnrootedVertex(2, 2, {1, 0, 0}));

  // above the anchor / outside the window
  CHECK_THROWS_AS(scale_apply(*data, a, UnrootedVertex::spine(2, -2)),
                  ValueError);
  CHECK_THROWS_AS(scale_apply(*data, x0, UnrootedVertex::spine(2, 4)),
                  LimitError);

  // movers invert each other across the window
  Mover m = scale_mover(data, a);
  for (const auto& v : data->window().vertices_at_level(0)) {
    auto fwd = m.fwd(v);
    REQUIRE(fwd);
    auto back = m.bwd(*fwd);
    REQUIRE(back);
    CHECK(*back == v);
  }
}

TEST_CASE("extraction reproduces the recursion") {
  struct Case {
    const char* name;
    int depth;
  };
  for (const Case c : {Case{"odometer(2)", 3}, Case{"odometer(3)", 2},
                       Case{"grigorchuk", 3}, Case{"gupta_sidki_3", 2}}) {
    auto data = make_scale_group(builtin_recursion(c.name), 1, c.depth + 1);
    auto ext = extract_selfreplicating(data, scale_generators(*data),
                                       UnrootedVertex::spine(data->q(), 0),
                                       c.depth, 1);
    for (int d = 1; d <= c.depth; ++d) {
      INFO(c.name << " depth " << d);
      CHECK(extraction_matches_recursion(ext, data->rec, d));
    }
    // the level-1 orbit of the extraction has full size
    PermGroup level1 = sections_level_group(ext, 1);
    CHECK(static_cast<int>(level1.orbit_of(0).size()) == data->q());
  }
}

TEST_CASE("extraction needs transitivity on the base level") {
  auto data = make_scale_group(builtin_odometer(2), 1, 3);
  std::vector<ScaleElement> only_translation{ScaleElement{"x0", 1, {}}};
  CHECK_THROWS_AS(
      extract_selfreplicating(data, only_translation,
                              UnrootedVertex::spine(2, 0), 2),
      ValueError);
}

TEST_CASE("labelling construction from transversals") {
  for (const char* name :
       {"odometer(2)", "odometer(3)", "full_sym_level(3)", "grigorchuk"}) {
    auto data = make_scale_group(builtin_recursion(name), 1, 3);
    TreeWindow win = data->window();
    auto transversal = builtin_transversal(data);
    CompatibleLabelling lab = build_labelling(data->q(), win, transversal);
    CHECK(lab.labels.child_maps_bijective());
    CHECK(lab.labels.spine_path_zero());
    // these transversals act on fresh digits only, so the produced labelling
    // is the standard one wherever covered
    for (const auto& [v, labels] : lab.labels.child_labels)
      for (int j = 0; j < data->q(); ++j) {
        INFO(name << " at " << v.to_string());
        CHECK(labels[j] == j);
      }
  }
}

TEST_CASE("labelling construction rejects bad transversals") {
  auto data = make_scale_group(builtin_odometer(2), 1, 3);
  int a = data->rec.require_state("a");
  Mover x0 = scale_mover(data, ScaleElement{"x0", 1, {}});
  Mover x1 = scale_mover(data, ScaleElement{"x1", 1, {{a, 1}}});
  CHECK_THROWS_AS(build_labelling(2, data->window(), {x0, x0}), ValueError);
  CHECK_THROWS_AS(build_labelling(2, data->window(), {x1, x0}), ValueError);
  CHECK_THROWS_AS(build_labelling(2, data->window(), {x0}), ValueError);
}

TEST_CASE("coset representatives of the product construction label the tree "
          "standardly") {
  auto s3 = make_group(FiniteGroup::sym3());
  auto act = std::make_shared<GfaAction>(make_gfa(s3, SubgroupSet::trivial()));
  std::vector<Mover> transversal;
  for (int i = 0; i < act->q(); ++i) {
    FSeqElement gi = act->transversal.rep(i);
    Mover m;
    m.name = "x" + std::to_string(i);
    m.fwd = [act, gi](const UnrootedVertex& v) -> std::optional<UnrootedVertex> {
      return act->act(gi, act->act_shift(1, v));
    };
    m.bwd = [act, gi](const UnrootedVertex& v) -> std::optional<UnrootedVertex> {
      return act->act_shift(-1, act->act(gi.inverse(*act->F), v));
    };
    transversal.push_back(std::move(m));
  }
  TreeWindow win{act->q(), 1, 2};
  CompatibleLabelling lab = build_labelling(act->q(), win, transversal);
  for (const auto& [v, labels] : lab.labels.child_labels)
    for (int j = 0; j < act->q(); ++j) CHECK(labels[j] == j);
}

TEST_CASE("compatibility witnesses") {
  auto data = make_scale_group(builtin_full_sym_level(2), 1, 3);
  TreeWindow win = data->window();
  EdgeLabelling standard = EdgeLabelling::standard(win);
  std::vector<Mover> movers;
  for (const auto& e : scale_generators(*data)) movers.push_back(scale_mover(data, e));

  std::vector<std::pair<UnrootedVertex, UnrootedVertex>> pairs{
      {UnrootedVertex::spine(2, 0), UnrootedVertex::spine(2, 0)},
      {UnrootedVertex::spine(2, 0), UnrootedVertex::spine(2, 1)},
      {UnrootedVertex::spine(2, 0), vx(2, 0, {1})},
      {vx(2, 0, {1}), UnrootedVertex::spine(2, -1)},
      {vx(2, 1, {1, 1}), UnrootedVertex::spine(2, 0)},
  };
  CompatReport rep = check_compatible(standard, win, movers, pairs, 8);
  CHECK(rep.ok);
  CHECK(rep.witnesses_found == static_cast<int>(pairs.size()));

  // with translations alone nothing reaches an off-spine vertex
  std::vector<Mover> translations{
      scale_mover(data, ScaleElement{"x0", 1, {}})};
  CompatReport bad = check_compatible(
      standard, win, translations,
      {{UnrootedVertex::spine(2, 0), vx(2, 0, {1})}}, 8);
  CHECK_FALSE(bad.ok);
  REQUIRE(bad.failures.size() == 1);
}

TEST_CASE("labellings for foreign units fail against the wrong subgroup") {
  // the unit-2 labelling is preserved by maps whose linear part is a power of
  // 2p, but not by multiplication by p itself
  TreeWindow win{5, 1, 3};
  EdgeLabelling l2 = label_edges(5, 2, win);
  auto wrap = [](AffineMap m) {
    Mover out;
    out.name = m.name;
    out.fwd = [m](const UnrootedVertex& v) -> std::optional<UnrootedVertex> {
      if (v.level + m.a_val < -4) return std::nullopt;
      return affine_act(m, v);
    };
    out.bwd = [m](const UnrootedVertex& v) -> std::optional<UnrootedVertex> {
      // act by the inverse map, computed modulo a comfortable window
      int prec = v.level + 8;
      PAdicNumber ainv = punit_inverse(m.a_unit, std::max(prec, 1));
      PAdicNumber minus_b = m.b;
      if (minus_b.digits.empty()) {
        AffineMap im{PAdicNumber::exact_int(v.q, 0), ainv, -m.a_val, ""};
        if (v.level - m.a_val < -4) return std::nullopt;
        return affine_act(im, v);
      }
      // -b = (p^k - b) for a sufficiently high power: digitwise complement
      std::vector<int> neg(std::max(prec, 1) - m.b.floor_exp, 0);
      int borrow = 0;
      for (std::size_t i = 0; i < neg.size(); ++i) {
        int d = -m.b.digit(m.b.floor_exp + static_cast<int>(i)) - borrow;
        borrow = 0;
        while (d < 0) {
          d += v.q;
          ++borrow;
        }
        neg[i] = d;
      }
      PAdicNumber mb = PAdicNumber::window(v.q, m.b.floor_exp, neg);
      PAdicNumber ab = pmul(ainv, mb);
      ab.floor_exp -= m.a_val;
      AffineMap im{ab, ainv, -m.a_val, ""};
      if (v.level - m.a_val < -4) return std::nullopt;
      return affine_act(im, v);
    };
    return out;
  };
  AffineMap plus1{PAdicNumber::exact_int(5, 1), PAdicNumber::exact_int(5, 1), 0,
                  "(1,1)"};
  AffineMap mulp{PAdicNumber::exact_int(5, 0), PAdicNumber::exact_int(5, 1), 1,
                 "(0,p)"};
  CompatReport rep = check_compatible(
      l2, win, {wrap(plus1), wrap(mulp)},
      {{UnrootedVertex::spine(5, 0), UnrootedVertex::spine(5, 1)}}, 4);
  CHECK_FALSE(rep.ok);

  // the same pair succeeds once the linear part is 2p
  AffineMap mul2p{PAdicNumber::exact_int(5, 0), PAdicNumber::exact_int(5, 2), 1,
                  "(0,2p)"};
  CompatReport good = check_compatible(
      l2, win, {wrap(plus1), wrap(mul2p)},
      {{UnrootedVertex::spine(5, 0), UnrootedVertex::spine(5, 1)}}, 4);
  CHECK(good.ok);
}

TEST_CASE("relabelling to the standard labelling") {
  TreeWindow win{5, 1, 3};
  // the standard labelling relabels trivially
  auto id_map = relabel_to_standard(EdgeLabelling::standard(win), win);
  for (const auto& [v, img] : id_map) CHECK(v == img);

  // a horosphere-uniform labelling relabels by rewriting digit words
  EdgeLabelling l2 = label_edges(5, 2, win);
  auto phi = relabel_to_standard(l2, win);
  CHECK(phi.at(UnrootedVertex::spine(5, 2)) == UnrootedVertex::spine(5, 2));
  // reading the label word: the vertex with digit j at slot 1 carries the
  // label 2^-1 j = 3j there
  CHECK(phi.at(vx(5, 1, {1})) == vx(5, 1, {3}));
  CHECK(phi.at(vx(5, 1, {2})) == vx(5, 1, {1}));
  // the map preserves levels and is injective on the window
  std::set<UnrootedVertex> images;
  for (const auto& [v, img] : phi) {
    CHECK(img.level == v.level);
    CHECK(images.insert(img).second);
  }

  EdgeLabelling broken = EdgeLabelling::standard(win);
  broken.set(UnrootedVertex::spine(5, 0), {1, 0, 2, 3, 4});
  CHECK_THROWS_AS(relabel_to_standard(broken, win), ValueError);
}

TEST_CASE("horosphere transitivity of elliptic parts") {
  auto full = make_scale_group(builtin_full_sym_level(3), 1, 3);
  std::vector<Mover> elliptic;
  for (const auto& e : scale_generators(*full, false))
    elliptic.push_back(scale_mover(full, e));
  for (int level = -1; level <= 2; ++level)
    CHECK(horosphere_transitivity_check(elliptic, full->window(), level));

  auto odo = make_scale_group(builtin_odometer(2), 1, 3);
  std::vector<Mover> a_only;
  for (const auto& e : scale_generators(*odo, false))
    a_only.push_back(scale_mover(odo, e));
  CHECK(horosphere_transitivity_check(a_only, odo->window(), 1));
  CHECK(horosphere_transitivity_check(a_only, odo->window(), 2));

  // translations alone leave every non-spine vertex unreached
  CHECK_FALSE(horosphere_transitivity_check({}, odo->window(), 1));
}

TEST_CASE("scale elements shift horospheres by their translation") {
  auto data = make_scale_group(builtin_gupta_sidki(), 1, 3);
  int t = data->rec.require_state("t");
  for (int k : {-1, 0, 1}) {
    ScaleElement e{"e", k, {{t, 1}}};
    for (const auto& v : data->window().vertices_at_level(1)) {
      auto img = try_scale_apply(*data, e, v);
      REQUIRE(img);
      CHECK(busemann(*img) == busemann(v) + k);
    }
  }
}
