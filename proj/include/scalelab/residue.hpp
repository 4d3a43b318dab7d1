#pragma once

#include <string>
#include <vector>

#include "scalelab/automata.hpp"
#include "scalelab/perm.hpp"

namespace scalelab {

// Canonical name for a small group from its fingerprint; larger groups are
// reported by order only.
inline std::string identify_group(const GroupFingerprint& fp) {
  if (fp.order == 1) return "1";
  if (fp.order == 2) return "C2";
  if (fp.order == 3) return "C3";
  if (fp.order == 4) {
    if (fp.element_order_histogram.count(4)) return "C4";
    return "C2xC2";
  }
  if (fp.order == 5) return "C5";
  if (fp.order == 6) return fp.abelian ? "C6" : "S3";
  std::string tag = "G" + fp.order.str();
  if (fp.abelian) tag += "-abelian";
  return tag;
}

struct ResidueReport {
  int d = 0;
  int degree = 0;  // q^d
  PermGroup group;
  GroupFingerprint fingerprint;
};

// Level-d residue of a self-replicating group given by a wreath recursion.
inline ResidueReport residue(const WreathRecursion& rec, int d) {
  LevelQuotient lq = level_quotient(rec, d);
  GroupFingerprint fp = lq.group.fingerprint();
  return ResidueReport{d, lq.group.degree(), lq.group, std::move(fp)};
}

// Orbit size of the distinguished level-1 vertex; equals q exactly when the
// group is transitive on level 1.
inline int index_check(const WreathRecursion& rec) {
  LevelQuotient lq = level_quotient(rec, 1);
  return static_cast<int>(lq.group.orbit_of(0).size());
}

struct CosetEquivalenceReport {
  bool equivalent = false;
  // witness bijection: coset index (BFS order from the identity coset) ->
  // level-d point
  std::vector<int> coset_to_point;
};

// The action on level d is equivalent to the translation action on the cosets
// of a level-d vertex stabilizer, via coset g.Stab -> point g.w. Enumerates
// the cosets by BFS and verifies the bijection is action-equivariant.
inline CosetEquivalenceReport coset_equivalence_check(const WreathRecursion& rec,
                                                      int d, const Digits& w) {
  if (static_cast<int>(w.size()) != d)
    throw ValueError("coset_equivalence_check: vertex must lie on level d");
  LevelQuotient lq = level_quotient(rec, d);
  if (d > 0 && !lq.group.is_transitive())
    throw ValueError(
        "coset_equivalence_check: level action is intransitive (group is not "
        "self-replicating)");
  int pw = 0;
  for (auto digit : w) pw = pw * rec.q + digit;

  CosetEquivalenceReport rep;
  std::vector<int> point_to_coset(lq.group.degree(), -1);
  std::vector<Permutation> reps{Permutation(lq.group.degree())};
  rep.coset_to_point.push_back(pw);
  point_to_coset[pw] = 0;
  for (std::size_t head = 0; head < reps.size(); ++head) {
    for (const auto& g : lq.group.generators()) {
      Permutation moved = compose(g, reps[head]);
      int pt = moved(pw);
      if (point_to_coset[pt] < 0) {
        point_to_coset[pt] = static_cast<int>(reps.size());
        rep.coset_to_point.push_back(pt);
        reps.push_back(std::move(moved));
      }
    }
  }
  if (reps.size() != static_cast<std::size_t>(lq.group.degree())) {
    rep.equivalent = false;
    return rep;
  }
  // equivariance of coset -> point under every generator, and stabilizer
  // consistency of the keying: representatives reaching the same point agree
  // modulo the stabilizer of w
  rep.equivalent = true;
  for (std::size_t c = 0; c < reps.size() && rep.equivalent; ++c) {
    for (const auto& g : lq.group.generators()) {
      Permutation moved = compose(g, reps[c]);
      int pt = g(rep.coset_to_point[c]);
      if (moved(pw) != pt || point_to_coset[pt] < 0) {
        rep.equivalent = false;
        break;
      }
      if (compose(reps[point_to_coset[pt]].inverse(), moved)(pw) != pw) {
        rep.equivalent = false;
        break;
      }
    }
  }
  return rep;
}

struct UniquenessReport {
  bool unique_up_to_conjugacy = false;
  std::vector<std::vector<std::vector<int>>> witness_blocks;
};

// A transitive level-1 action admits a unique tree representation up to
// conjugacy exactly when it is primitive; otherwise every minimal block
// system witnesses a strictly intermediate subgroup.
inline UniquenessReport uniqueness_criterion(const PermGroup& level1_action) {
  if (!level1_action.is_transitive())
    throw ValueError("uniqueness_criterion: action must be transitive");
  UniquenessReport rep;
  rep.witness_blocks = level1_action.minimal_block_systems();
  rep.unique_up_to_conjugacy = rep.witness_blocks.empty();
  return rep;
}

}  // namespace scalelab
