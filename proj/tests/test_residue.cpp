#include <catch2/catch_amalgamated.hpp>

#include "scalelab/residue.hpp"

using namespace scalelab;

namespace {
WreathRecursion root_swap_q3() {
  WreathRecursion rec = WreathRecursion::empty(3);
  rec.add_state("r", parse_cycles("(0 1)", 3), {0, 0, 0});
  rec.generators = {1};
  return rec;
}
}  // namespace

TEST_CASE("level residues") {
  // the full local group appears at level 1
  ResidueReport full = residue(builtin_full_sym_level(4), 1);
  CHECK(full.degree == 4);
  CHECK(full.fingerprint.order == 24);
  CHECK_FALSE(full.fingerprint.abelian);

  // adding machine: cyclic and regular at every depth
  for (int d = 1; d <= 3; ++d) {
    ResidueReport r = residue(builtin_odometer(3), d);
    BigInt expect = 1;
    for (int i = 0; i < d; ++i) expect *= 3;
    CHECK(r.fingerprint.order == expect);
    CHECK(r.group.is_transitive());
    CHECK(r.fingerprint.abelian);
  }

  WreathRecursion idonly = WreathRecursion::empty(2);
  idonly.generators = {0};
  CHECK(residue(idonly, 2).fingerprint.order == 1);
}

TEST_CASE("index of the level-1 orbit") {
  CHECK(index_check(builtin_odometer(3)) == 3);
  CHECK(index_check(builtin_full_sym_level(4)) == 4);
  CHECK(index_check(root_swap_q3()) == 2);  // != q flags the intransitive case
}

TEST_CASE("coset-space equivalence of the level action") {
  auto rep = coset_equivalence_check(builtin_odometer(2), 2, Digits{0, 0});
  CHECK(rep.equivalent);
  CHECK(rep.coset_to_point.size() == 4);
  CHECK(rep.coset_to_point[0] == 0);

  auto grig = coset_equivalence_check(builtin_grigorchuk(), 2, Digits{1, 0});
  CHECK(grig.equivalent);
  CHECK(grig.coset_to_point.size() == 4);

  auto trivial = coset_equivalence_check(builtin_odometer(2), 0, Digits{});
  CHECK(trivial.equivalent);
  CHECK(trivial.coset_to_point.size() == 1);

  CHECK_THROWS_AS(coset_equivalence_check(root_swap_q3(), 1, Digits{0}),
                  ValueError);
  CHECK_THROWS_AS(coset_equivalence_check(builtin_odometer(2), 2, Digits{0}),
                  ValueError);
}

TEST_CASE("uniqueness criterion") {
  // regular representation of the symmetric group on three letters
  PermGroup reg_s3(6, {parse_cycles("(0 1 2)(3 5 4)", 6),
                       parse_cycles("(0 3)(1 4)(2 5)", 6)});
  REQUIRE(reg_s3.order() == 6);
  REQUIRE_FALSE(reg_s3.is_abelian());
  auto rep = uniqueness_criterion(reg_s3);
  CHECK_FALSE(rep.unique_up_to_conjugacy);
  CHECK_FALSE(rep.witness_blocks.empty());

  PermGroup c4(4, {parse_cycles("(0 1 2 3)", 4)});
  auto repc4 = uniqueness_criterion(c4);
  CHECK_FALSE(repc4.unique_up_to_conjugacy);
  REQUIRE(repc4.witness_blocks.size() == 1);
  CHECK(repc4.witness_blocks[0] ==
        std::vector<std::vector<int>>{{0, 2}, {1, 3}});

  for (int q = 3; q <= 6; ++q) {
    std::vector<Permutation> gens{parse_cycles("(0 1)", q)};
    std::string cyc = "(";
    for (int i = 0; i < q; ++i) cyc += (i ? " " : "") + std::to_string(i);
    cyc += ")";
    gens.push_back(parse_cycles(cyc, q));
    CHECK(uniqueness_criterion(PermGroup(q, gens)).unique_up_to_conjugacy);
  }

  // regular actions of composite-order cyclic groups always have blocks
  for (int n : {4, 6, 8, 9}) {
    std::string cyc = "(";
    for (int i = 0; i < n; ++i) cyc += (i ? " " : "") + std::to_string(i);
    cyc += ")";
    PermGroup reg(n, {parse_cycles(cyc, n)});
    CHECK_FALSE(uniqueness_criterion(reg).unique_up_to_conjugacy);
  }

  CHECK_THROWS_AS(
      uniqueness_criterion(PermGroup(3, {parse_cycles("(0 1)", 3)})),
      ValueError);
}

TEST_CASE("small group identification") {
  auto fp = [](std::vector<Permutation> gens, int deg) {
    return PermGroup(deg, std::move(gens)).fingerprint();
  };
  CHECK(identify_group(fp({}, 3)) == "1");
  CHECK(identify_group(fp({parse_cycles("(0 1)", 2)}, 2)) == "C2");
  CHECK(identify_group(fp({parse_cycles("(0 1 2)", 3)}, 3)) == "C3");
  CHECK(identify_group(fp({parse_cycles("(0 1 2 3)", 4)}, 4)) == "C4");
  CHECK(identify_group(
            fp({parse_cycles("(0 1)", 4), parse_cycles("(2 3)", 4)}, 4)) ==
        "C2xC2");
  CHECK(identify_group(
            fp({parse_cycles("(0 1)", 3), parse_cycles("(0 1 2)", 3)}, 3)) ==
        "S3");
  CHECK(identify_group(fp({parse_cycles("(0 1 2)(3 4)", 5)}, 5)) == "C6");
}
