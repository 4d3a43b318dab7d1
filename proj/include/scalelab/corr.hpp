#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scalelab/automata.hpp"
#include "scalelab/portraits.hpp"
#include "scalelab/trees.hpp"

namespace scalelab {

// Invertible partial map on tree vertices. Maps return nullopt where the
// element is not defined (above the anchor of an anchored word).
struct Mover {
  std::string name;
  std::function<std::optional<UnrootedVertex>(const UnrootedVertex&)> fwd;
  std::function<std::optional<UnrootedVertex>(const UnrootedVertex&)> bwd;

  std::optional<UnrootedVertex> apply(const UnrootedVertex& v, int dir) const {
    return dir >= 0 ? fwd(v) : bwd(v);
  }
};

using MoverWord = std::vector<std::pair<int, int>>;  // (mover index, +-1)

inline std::optional<UnrootedVertex> apply_mover_word(
    const std::vector<Mover>& movers, const MoverWord& word,
    UnrootedVertex v) {
  for (auto it = word.rbegin(); it != word.rend(); ++it) {
    auto next = movers[it->first].apply(v, it->second);
    if (!next) return std::nullopt;
    v = *next;
  }
  return v;
}

inline MoverWord invert_mover_word(const MoverWord& w) {
  MoverWord out;
  out.reserve(w.size());
  for (auto it = w.rbegin(); it != w.rend(); ++it)
    out.emplace_back(it->first, -it->second);
  return out;
}

// ---------------------------------------------------------------------------
// Scale-group data: a self-replicating recursion whose elements act below the
// spine anchor at level -R, together with the spine translation.

struct ScaleGroupData {
  WreathRecursion rec;
  int R = 1;
  int D = 4;
  SelfReplicatingReport validation;

  int q() const { return rec.q; }
  UnrootedVertex anchor() const { return UnrootedVertex::spine(rec.q, -R); }
  TreeWindow window() const { return TreeWindow{rec.q, R, D}; }
};

// Validates self-replication of the closure at depth R + D before accepting
// the data.
inline std::shared_ptr<const ScaleGroupData> make_scale_group(
    WreathRecursion rec, int R, int D) {
  if (R < 1 || D < 1) throw ValueError("anchor radius and depth must be >= 1");
  std::size_t pts = 1;
  for (int i = 0; i < R + D + 1; ++i) {
    pts *= rec.q;
    if (pts > limits().max_points)
      throw LimitError("validation depth exceeds max_points");
  }
  auto data = std::make_shared<ScaleGroupData>();
  data->rec = std::move(rec);
  data->R = R;
  data->D = D;
  data->validation = check_self_replicating(data->rec, R + D);
  if (!data->validation.ok)
    throw ValueError("recursion is not self-replicating at depth " +
                     std::to_string(R + D));
  return data;
}

// Element of the scale group: an anchored word applied inside the subtree
// below the anchor, followed by a translation along the spine.
struct ScaleElement {
  std::string name;
  int translation = 0;
  GroupWord word;
};

// Applies elliptic part then translation; defined only below the anchor (and,
// for the checked variant, inside the window).
inline std::optional<UnrootedVertex> try_scale_apply(const ScaleGroupData& data,
                                                     const ScaleElement& e,
                                                     const UnrootedVertex& v,
                                                     int dir = 1) {
  UnrootedVertex anchor = data.anchor();
  if (dir >= 0) {
    if (!v.below(anchor)) return std::nullopt;
    Digits s = evaluate(data.rec, e.word, subtree_iso(anchor, v));
    return x0_translate(subtree_iso_inv(anchor, s), e.translation);
  }
  UnrootedVertex w = x0_translate(v, -e.translation);
  if (!w.below(anchor)) return std::nullopt;
  Digits s = evaluate(data.rec, invert_word(e.word), subtree_iso(anchor, w));
  return subtree_iso_inv(anchor, s);
}

inline UnrootedVertex scale_apply(const ScaleGroupData& data,
                                  const ScaleElement& e,
                                  const UnrootedVertex& v) {
  if (!v.below(data.anchor()))
    throw ValueError("vertex above the anchor of the scale-group window");
  if (!data.window().contains(v))
    throw LimitError("scale_apply: vertex outside window");
  auto out = try_scale_apply(data, e, v, 1);
  if (!out || !data.window().contains(*out))
    throw LimitError("scale_apply: window exceeded");
  return *out;
}

inline Mover scale_mover(std::shared_ptr<const ScaleGroupData> data,
                         ScaleElement e) {
  Mover m;
  m.name = e.name;
  m.fwd = [data, e](const UnrootedVertex& v) {
    return try_scale_apply(*data, e, v, 1);
  };
  m.bwd = [data, e](const UnrootedVertex& v) {
    return try_scale_apply(*data, e, v, -1);
  };
  return m;
}

// Generator elements of the scale group built from a recursion: all listed
// generator states as anchored elliptic words plus the spine translation.
inline std::vector<ScaleElement> scale_generators(const ScaleGroupData& data,
                                                  bool include_translation = true) {
  std::vector<ScaleElement> out;
  for (int s : data.rec.generators)
    out.push_back(ScaleElement{data.rec.states[s].name, 0, {{s, 1}}});
  if (include_translation) out.push_back(ScaleElement{"x0", 1, {}});
  return out;
}

// ---------------------------------------------------------------------------
// Extraction of the self-replicating group: sections at v of stabilizer
// words (Schreier generators over the windowed orbit graph).

struct ExtractionResult {
  UnrootedVertex base;
  int depth = 0;
  std::vector<RootedPortrait> sections;  // deduplicated, identity dropped
};

inline ExtractionResult extract_selfreplicating(
    std::shared_ptr<const ScaleGroupData> data,
    const std::vector<ScaleElement>& elements, const UnrootedVertex& v,
    int depth, int orbit_level_cap = 1 << 20) {
  const ScaleGroupData& dat = *data;
  TreeWindow win = dat.window();
  if (!win.contains(v)) throw ValueError("extraction base outside window");
  if (v.level + depth > dat.D)
    throw ValueError("extraction depth exceeds the window");
  int cap = std::min(orbit_level_cap, dat.D);

  struct Visit {
    int prev = -1;
    int letter_elem = -1;
    int letter_dir = 0;
  };
  std::map<UnrootedVertex, int> index_of;
  std::vector<UnrootedVertex> orbit{v};
  std::vector<Visit> visits{Visit{}};
  index_of[v] = 0;
  for (std::size_t head = 0; head < orbit.size(); ++head) {
    for (std::size_t ei = 0; ei < elements.size(); ++ei)
      for (int dir : {1, -1}) {
        auto img = try_scale_apply(dat, elements[ei], orbit[head], dir);
        if (!img || !win.contains(*img) || img->level > cap) continue;
        if (index_of.count(*img)) continue;
        index_of[*img] = static_cast<int>(orbit.size());
        orbit.push_back(*img);
        visits.push_back({static_cast<int>(head), static_cast<int>(ei), dir});
      }
  }

  // the generators must reach the whole window slice of v's level
  for (const auto& u : win.vertices_at_level(v.level))
    if (!index_of.count(u))
      throw ValueError(
          "generators do not act transitively on the level of the base vertex "
          "within the window");

  auto word_to = [&](int idx) {
    MoverWord w;
    for (int at = idx; visits[at].prev != -1; at = visits[at].prev)
      w.emplace_back(visits[at].letter_elem, visits[at].letter_dir);
    return w;  // letters already in apply order (outermost first)
  };

  // leaves below v at the requested depth, in lexicographic order
  std::size_t leaf_count = 1;
  for (int i = 0; i < depth; ++i) leaf_count *= dat.q();
  std::vector<UnrootedVertex> leaves;
  leaves.reserve(leaf_count);
  Digits s(depth, 0);
  for (std::size_t idx = 0; idx < leaf_count; ++idx) {
    std::size_t rem = idx;
    for (int pos = depth - 1; pos >= 0; --pos) {
      s[pos] = static_cast<std::uint8_t>(rem % dat.q());
      rem /= dat.q();
    }
    leaves.push_back(subtree_iso_inv(v, s));
  }

  auto apply_word_letters = [&](const MoverWord& w, UnrootedVertex x) {
    for (auto it = w.rbegin(); it != w.rend(); ++it) {
      auto n = try_scale_apply(dat, elements[it->first], x, it->second);
      if (!n) throw Error("internal: stabilizer word left the anchored subtree");
      x = *n;
    }
    return x;
  };

  ExtractionResult result;
  result.base = v;
  result.depth = depth;
  std::set<std::vector<int>> seen;
  for (std::size_t ui = 0; ui < orbit.size(); ++ui) {
    MoverWord tu = word_to(static_cast<int>(ui));
    for (std::size_t ei = 0; ei < elements.size(); ++ei)
      for (int dir : {1, -1}) {
        auto img = try_scale_apply(dat, elements[ei], orbit[ui], dir);
        if (!img || !index_of.count(*img)) continue;
        MoverWord word = invert_mover_word(word_to(index_of[*img]));
        word.emplace_back(static_cast<int>(ei), dir);
        word.insert(word.end(), tu.begin(), tu.end());
        // leaf action of the stabilizer word
        std::vector<int> leaf_perm(leaf_count);
        bool identity = true;
        for (std::size_t li = 0; li < leaf_count; ++li) {
          UnrootedVertex image = apply_word_letters(word, leaves[li]);
          if (!image.below(v))
            throw Error("internal: stabilizer word does not fix the base");
          Digits address = subtree_iso(v, image);
          std::size_t out = 0;
          for (auto digit : address) out = out * dat.q() + digit;
          leaf_perm[li] = static_cast<int>(out);
          if (out != li) identity = false;
        }
        if (identity || !seen.insert(leaf_perm).second) continue;
        // portrait of the section, read from the leaf images
        RootedPortrait portrait;
        portrait.q = dat.q();
        portrait.depth_valid = depth;
        std::vector<Digits> prefixes{{}};
        for (std::size_t head = 0; head < prefixes.size(); ++head) {
          const Digits u = prefixes[head];
          if (static_cast<int>(u.size()) >= depth) continue;
          std::vector<int> im(dat.q());
          for (int j = 0; j < dat.q(); ++j) {
            std::size_t leaf = 0;
            for (auto digit : u) leaf = leaf * dat.q() + digit;
            leaf = leaf * dat.q() + j;
            for (int pad = static_cast<int>(u.size()) + 1; pad < depth; ++pad)
              leaf *= dat.q();
            std::size_t image = static_cast<std::size_t>(leaf_perm[leaf]);
            for (int pad = static_cast<int>(u.size()) + 1; pad < depth; ++pad)
              image /= dat.q();
            im[j] = static_cast<int>(image % dat.q());
          }
          Permutation pi(std::move(im));
          if (!pi.is_identity()) portrait.local.emplace(u, pi);
          for (int j = 0; j < dat.q(); ++j) {
            Digits uj = u;
            uj.push_back(static_cast<std::uint8_t>(j));
            prefixes.push_back(std::move(uj));
          }
        }
        result.sections.push_back(std::move(portrait));
      }
  }
  return result;
}

// Level-d permutation group generated by extracted sections.
inline PermGroup sections_level_group(const ExtractionResult& ext, int d) {
  if (d > ext.depth) throw ValueError("sections truncated above depth");
  std::vector<Permutation> gens;
  std::set<Permutation> dedup;
  for (const auto& s : ext.sections) {
    Permutation p = s.level_permutation(d);
    if (!p.is_identity() && dedup.insert(p).second) gens.push_back(std::move(p));
  }
  std::size_t n = 1;
  for (int i = 0; i < d; ++i) n *= ext.base.q;
  return PermGroup(static_cast<int>(n), std::move(gens));
}

// The extraction reproduces the original group exactly when the two level-d
// permutation groups coincide (mutual membership and equal order).
inline bool extraction_matches_recursion(const ExtractionResult& ext,
                                         const WreathRecursion& rec, int d) {
  PermGroup mine = sections_level_group(ext, d);
  LevelQuotient ref = level_quotient(rec, d);
  if (mine.order() != ref.group.order()) return false;
  for (const auto& g : mine.generators())
    if (!ref.group.contains(g)) return false;
  for (const auto& g : ref.group.generators())
    if (!mine.contains(g)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Labelling construction: unwinding words in the transversal below the
// basepoint, pulling back along spine translations above it.

struct CompatibleLabelling {
  int q = 2;
  TreeWindow win;
  EdgeLabelling labels;
  // witness data: word in transversal indices for vertices below the
  // basepoint, pullback shift for the others
  std::map<UnrootedVertex, std::vector<int>> witness_word;
  std::map<UnrootedVertex, int> pullback_shift;
};

// Transversal movers x_0..x_{q-1}: x_i sends the basepoint to its i-labelled
// child; x_0 must translate the spine.
inline CompatibleLabelling build_labelling(int q, const TreeWindow& win,
                                           const std::vector<Mover>& transversal) {
  if (static_cast<int>(transversal.size()) != q)
    throw ValueError("transversal must have exactly q elements");
  UnrootedVertex v0 = UnrootedVertex::spine(q, 0);
  std::vector<UnrootedVertex> children;
  std::set<UnrootedVertex> distinct;
  for (int i = 0; i < q; ++i) {
    auto img = transversal[i].fwd(v0);
    if (!img || img->level != 1 || img->parent() != v0)
      throw ValueError("transversal element " + std::to_string(i) +
                       " does not send the basepoint to a child");
    if (!distinct.insert(*img).second)
      throw ValueError("transversal is not a bijection onto the children");
    children.push_back(*img);
  }
  if (!children[0].on_spine())
    throw ValueError("transversal x0 must send the basepoint down the spine");
  for (int k = -win.R; k < win.D; ++k) {
    auto img = transversal[0].fwd(UnrootedVertex::spine(q, k));
    if (!img || !img->on_spine() || img->level != k + 1)
      throw ValueError("transversal x0 does not translate the spine");
  }

  CompatibleLabelling out;
  out.q = q;
  out.win = win;
  out.labels.q = q;

  // below the basepoint: breadth-first over transversal words
  struct Item {
    UnrootedVertex vertex;
    std::vector<int> word;
  };
  std::vector<Item> frontier{{v0, {}}};
  auto apply_word = [&](const std::vector<int>& word, UnrootedVertex x)
      -> std::optional<UnrootedVertex> {
    for (auto it = word.rbegin(); it != word.rend(); ++it) {
      auto n = transversal[*it].fwd(x);
      if (!n) return std::nullopt;
      x = *n;
    }
    return x;
  };
  for (std::size_t head = 0; head < frontier.size(); ++head) {
    Item item = frontier[head];
    out.witness_word[item.vertex] = item.word;
    if (item.vertex.level >= win.D) continue;
    std::vector<std::uint8_t> labels(q, 0);
    std::vector<bool> assigned(q, false);
    for (int i = 0; i < q; ++i) {
      auto child = apply_word(item.word, children[i]);
      if (!child || child->parent() != item.vertex)
        throw ValueError("transversal words left the window before the "
                         "labelling closed");
      int digit = child->digit_at(child->level);
      if (assigned[digit])
        throw ValueError("transversal words produced a repeated child");
      assigned[digit] = true;
      labels[digit] = static_cast<std::uint8_t>(i);
      std::vector<int> word = item.word;
      word.push_back(i);
      frontier.push_back({*child, std::move(word)});
    }
    out.labels.set(item.vertex, std::move(labels));
  }

  // everything else in the covered region pulls back along powers of the
  // transversal element x0; coverage needs the pulled vertex to stay labelled
  for (int lvl = -win.R; lvl < win.D; ++lvl) {
    for (const auto& v : win.vertices_at_level(lvl)) {
      if (out.labels.covers(v)) continue;
      UnrootedVertex up = v;
      int n = 0;
      bool ok = true;
      while (up.level < 0 || up.len() > up.level) {
        auto img = transversal[0].fwd(up);
        if (!img || ++n > win.R + win.D + 1) {
          ok = false;
          break;
        }
        up = *img;
      }
      if (!ok || !out.labels.covers(up)) continue;
      std::vector<std::uint8_t> labels(q, 0);
      std::vector<bool> assigned(q, false);
      for (int j = 0; j < q; ++j) {
        UnrootedVertex u = v.child(j);
        std::optional<UnrootedVertex> img = u;
        for (int step = 0; step < n && img; ++step) img = transversal[0].fwd(*img);
        if (!img || img->parent() != up) {
          ok = false;
          break;
        }
        int dj = img->digit_at(img->level);
        if (assigned[dj]) {
          ok = false;
          break;
        }
        assigned[dj] = true;
        labels[j] = static_cast<std::uint8_t>(out.labels.label(up, dj));
      }
      if (!ok) continue;
      out.labels.set(v, std::move(labels));
      out.pullback_shift[v] = n;
    }
  }

  if (!out.labels.child_maps_bijective())
    throw Error("internal: produced labelling is not bijective");
  if (!out.labels.spine_path_zero())
    throw Error("internal: produced labelling breaks the spine condition");
  return out;
}

// ---------------------------------------------------------------------------
// Compatibility check: exhibit group elements carrying one subtree onto
// another while preserving labels.

using VertexMap = std::function<std::optional<UnrootedVertex>(const UnrootedVertex&)>;

struct CompatReport {
  int trials = 0;
  int witnesses_found = 0;
  bool ok = true;
  std::vector<std::pair<UnrootedVertex, UnrootedVertex>> failures;
};

// True when x maps every labelled edge below u1 (within the covered region)
// to an equally labelled edge.
inline bool preserves_labels_below(const EdgeLabelling& labels,
                                   const TreeWindow& win, const VertexMap& x,
                                   const UnrootedVertex& u1) {
  for (int lvl = u1.level; lvl < win.D; ++lvl) {
    for (const auto& w : win.vertices_at_level(lvl)) {
      if (!w.below(u1) || !labels.covers(w)) continue;
      auto img = x(w);
      if (!img || !labels.covers(*img)) continue;
      for (int j = 0; j < win.q; ++j) {
        auto child_img = x(w.child(j));
        if (!child_img) continue;
        if (child_img->parent() != *img) return false;
        int dj = child_img->digit_at(child_img->level);
        if (labels.label(*img, dj) != labels.label(w, j)) return false;
      }
    }
  }
  return true;
}

// Searches bounded mover words sending u1 to u2; returns one preserving the
// labelling, if any.
inline std::optional<MoverWord> find_label_preserving_word(
    const EdgeLabelling& labels, const TreeWindow& win,
    const std::vector<Mover>& movers, const UnrootedVertex& u1,
    const UnrootedVertex& u2, int max_len, std::size_t max_words = 4096) {
  std::vector<std::pair<UnrootedVertex, MoverWord>> frontier{{u1, {}}};
  std::set<UnrootedVertex> seen{u1};
  std::vector<MoverWord> hits;
  for (std::size_t head = 0; head < frontier.size(); ++head) {
    auto [at, word] = frontier[head];
    if (static_cast<int>(word.size()) >= max_len) continue;
    for (std::size_t mi = 0; mi < movers.size(); ++mi)
      for (int dir : {1, -1}) {
        auto img = movers[mi].apply(at, dir);
        if (!img) continue;
        // word entries are outermost-first; the new letter applies last
        MoverWord stored = word;
        stored.insert(stored.begin(), {static_cast<int>(mi), dir});
        if (*img == u2) hits.push_back(stored);
        if (seen.insert(*img).second && frontier.size() < max_words)
          frontier.push_back({*img, stored});
      }
    if (!hits.empty()) break;
  }
  for (const auto& w : hits) {
    VertexMap x = [&movers, w](const UnrootedVertex& v) {
      return apply_mover_word(movers, w, v);
    };
    if (preserves_labels_below(labels, win, x, u1)) return w;
  }
  return std::nullopt;
}

// For sampled vertex pairs, exhibit label-preserving elements. A solver, when
// given, proposes the witness directly; otherwise bounded word search is used.
inline CompatReport check_compatible(
    const EdgeLabelling& labels, const TreeWindow& win,
    const std::vector<Mover>& movers,
    const std::vector<std::pair<UnrootedVertex, UnrootedVertex>>& pairs,
    int search_len = 6,
    const std::function<std::optional<VertexMap>(const UnrootedVertex&,
                                                 const UnrootedVertex&)>&
        solver = nullptr) {
  CompatReport rep;
  for (const auto& [u1, u2] : pairs) {
    ++rep.trials;
    bool found = false;
    if (solver) {
      auto x = solver(u1, u2);
      if (x) {
        auto image = (*x)(u1);
        if (image && *image == u2 &&
            preserves_labels_below(labels, win, *x, u1))
          found = true;
      }
    }
    if (!found && find_label_preserving_word(labels, win, movers, u1, u2,
                                             search_len))
      found = true;
    if (found)
      ++rep.witnesses_found;
    else {
      rep.ok = false;
      rep.failures.emplace_back(u1, u2);
    }
  }
  return rep;
}

// Deterministic pair sample across the covered window levels.
inline std::vector<std::pair<UnrootedVertex, UnrootedVertex>> sample_pairs(
    const TreeWindow& win, int per_level, int max_level) {
  std::vector<std::pair<UnrootedVertex, UnrootedVertex>> out;
  std::uint64_t state = 0x243f6a8885a308d3ull;
  auto next = [&state](std::uint64_t bound) {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    return bound ? (state >> 17) % bound : 0;
  };
  for (int l1 = -win.R; l1 <= std::min(max_level, win.D); ++l1)
    for (int l2 = -win.R; l2 <= std::min(max_level, win.D); ++l2) {
      auto a = win.vertices_at_level(l1);
      auto b = win.vertices_at_level(l2);
      for (int k = 0; k < per_level; ++k)
        out.emplace_back(a[next(a.size())], b[next(b.size())]);
    }
  return out;
}

// ---------------------------------------------------------------------------

// Vertex relabelling reading each vertex's label word toward the end: the
// conjugation carrying this labelling to the standard one.
inline std::map<UnrootedVertex, UnrootedVertex> relabel_to_standard(
    const EdgeLabelling& labels, const TreeWindow& win) {
  if (!labels.child_maps_bijective())
    throw ValueError("labelling violates the child-bijection condition");
  if (!labels.spine_path_zero())
    throw ValueError("labelling violates the spine condition");
  std::map<UnrootedVertex, UnrootedVertex> out;
  for (int lvl = -win.R; lvl <= win.D; ++lvl) {
    for (const auto& v : win.vertices_at_level(lvl)) {
      Digits word;
      bool complete = true;
      UnrootedVertex at = v;
      while (at.level > -win.R) {
        UnrootedVertex up = at.parent();
        if (!labels.covers(up)) {
          complete = false;
          break;
        }
        word.push_back(
            static_cast<std::uint8_t>(labels.label(up, at.digit_at(at.level))));
        at = up;
      }
      if (!complete) continue;
      std::reverse(word.begin(), word.end());
      out.emplace(v, subtree_iso_inv(UnrootedVertex::spine(win.q, -win.R), word));
    }
  }
  return out;
}

// Orbit check of level-preserving movers on one window horosphere.
inline bool horosphere_transitivity_check(const std::vector<Mover>& elliptic,
                                          const TreeWindow& win, int level) {
  auto slice = win.vertices_at_level(level);
  if (slice.empty()) return true;
  std::set<UnrootedVertex> seen{slice[0]};
  std::vector<UnrootedVertex> work{slice[0]};
  for (std::size_t head = 0; head < work.size(); ++head) {
    for (const auto& m : elliptic)
      for (int dir : {1, -1}) {
        auto img = m.apply(work[head], dir);
        if (!img || img->level != level || !win.contains(*img)) continue;
        if (seen.insert(*img).second) work.push_back(*img);
      }
  }
  for (const auto& v : slice)
    if (!seen.count(v)) return false;
  return true;
}

}  // namespace scalelab
