#include "dehnfill/windmill.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dehnfill/errors.hpp"
#include "dehnfill/metric_kernel.hpp"

namespace dehnfill {

namespace {

GroupWord power_word(const GroupWord& g, std::int64_t n,
                     const FreeProductPresentation& pres) {
  GroupWord out;
  const GroupWord base = n < 0 ? inverse_word(g) : g;
  for (std::int64_t i = 0; i < (n < 0 ? -n : n); ++i) out = mul(out, base, pres);
  return out;
}

/// Shortlex section of a quotient element back into G.
GroupWord section_word(const SyllableForm& q,
                       const FreeProductPresentation&,
                       const FillingSpec& filling) {
  std::vector<Letter> letters;
  for (const auto& syl : q.syllables) {
    const std::int64_t k = filling.indices[static_cast<std::size_t>(syl.factor)];
    const std::int64_t e = 2 * syl.exp <= k ? syl.exp : syl.exp - k;
    const int sign = e < 0 ? -1 : 1;
    for (std::int64_t i = 0; i < (e < 0 ? -e : e); ++i) {
      letters.push_back({syl.factor, sign});
    }
  }
  return reduce(std::move(letters));
}

/// Nontrivial sample words of the subgroup generated by gens: generator
/// powers and short mixed products, deduplicated, capped.
std::vector<GroupWord> subgroup_samples(const std::vector<GroupWord>& gens,
                                        const FreeProductPresentation& pres,
                                        std::int64_t powers, std::size_t cap) {
  std::vector<GroupWord> out;
  std::set<std::string> seen;
  auto push = [&](const GroupWord& w) {
    if (w.is_identity() || out.size() >= cap) return;
    const std::string key = format_word(w, pres);
    if (seen.insert(key).second) out.push_back(w);
  };
  for (const auto& g : gens) {
    GroupWord p;
    for (std::int64_t j = 1; j <= powers; ++j) {
      p = mul(p, g, pres);
      push(p);
      push(inverse_word(p));
    }
  }
  for (std::size_t i = 0; i < gens.size() && i < 16; ++i) {
    for (std::size_t j = 0; j < gens.size() && j < 16; ++j) {
      if (i == j) continue;
      push(mul(gens[i], gens[j], pres));
      push(mul(gens[i], inverse_word(gens[j]), pres));
    }
  }
  return out;
}

/// Hull in a tree metric: union of the geodesics from a root of Y to all
/// of Y covers every pairwise geodesic.
PointSubset tree_hull(const FiniteMetricSpace& s, const PointSubset& Y) {
  const PointId root = Y.members.front();
  std::vector<PointId> out;
  for (PointId z = 0; z < s.size(); ++z) {
    for (PointId y : Y.members) {
      if (s.dist(root, z) + s.dist(z, y) == s.dist(root, y)) {
        out.push_back(z);
        break;
      }
    }
  }
  return PointSubset::of(s, std::move(out));
}

PointSubset hull_of(const FiniteMetricSpace& s, const PointSubset& Y,
                    const Rat& delta) {
  if (Y.empty()) return Y;
  if (s.is_tree_metric()) return tree_hull(s, Y);
  return hull(s, Y, delta);
}

std::int64_t letters_of(const GroupWord& w) {
  return static_cast<std::int64_t>(w.letters.size());
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

std::vector<PointId> apices_in(const TruncatedTree& tree,
                               const PointSubset& W) {
  std::vector<PointId> out;
  for (PointId v : W.members) {
    if (tree.vertex(v).kind == VertexKind::apex) out.push_back(v);
  }
  return out;
}

std::vector<GroupWord> rotation_gens_for(const TruncatedTree& tree,
                                         const RotationFamily& family,
                                         const std::vector<PointId>& V) {
  const auto& pres = tree.presentation();
  std::vector<GroupWord> out;
  for (PointId v : V) {
    const RotationPair* p = family.pair_at(v);
    if (p == nullptr) continue;
    out.push_back(conjugate(p->conjugator,
                            filling_generator(pres, family.filling, p->factor),
                            pres));
  }
  return out;
}

bool connected_within(const TruncatedTree& tree, const PointSubset& W) {
  if (W.size() <= 1) return true;
  std::set<PointId> inside(W.members.begin(), W.members.end());
  std::vector<PointId> stack{W.members.front()};
  std::set<PointId> seen{W.members.front()};
  while (!stack.empty()) {
    const PointId x = stack.back();
    stack.pop_back();
    for (const auto& [a, b] : tree.base_metric().graph_edges()) {
      const PointId other = a == x ? b : (b == x ? a : PointId(-1));
      if (other < 0 || !inside.count(other) || seen.count(other)) continue;
      seen.insert(other);
      stack.push_back(other);
    }
  }
  return seen.size() == inside.size();
}

}  // namespace

bool FreeFactorLedger::has(int factor, const GroupWord& conjugator) const {
  for (const auto& f : factors) {
    if (f.factor == factor && f.conjugator == conjugator) return true;
  }
  return false;
}

nlohmann::json FreeFactorLedger::to_json(
    const FreeProductPresentation& pres) const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : factors) {
    arr.push_back({{"factor", f.factor},
                   {"conjugator", format_word(f.conjugator, pres)},
                   {"stage", f.stage}});
  }
  return {{"base", base ? format_word(*base, pres) : "1"},
          {"factors", arr}};
}

bool WindmillState::in_V(PointId v) const {
  return std::binary_search(V.begin(), V.end(), v);
}

WindmillState init_windmill(const TruncatedTree& tree,
                            const RotationFamily& family, const PointSubset& Y,
                            const std::vector<GroupWord>& N_gens,
                            const WindmillOptions& opts) {
  const auto& pres = tree.presentation();
  const auto& sub = tree.subdivided_metric();
  if (Y.empty()) throw input_error("windmill seed must be nonempty");

  // quasi-convexity of the seed
  if (Y.size() <= 120) {
    const Rat defect = quasiconvexity_defect(sub, Y);
    if (defect > 2 * opts.delta) {
      throw precondition_error("seed is not 2*delta-quasi-convex, defect " +
                               format_rational(defect));
    }
  } else if (!connected_within(tree, Y)) {
    throw precondition_error("seed is disconnected in the tree");
  }

  const auto n_sample = subgroup_samples(N_gens, pres, 3, 32);

  // N stabilizes Y, checked on the word-length interior
  for (const auto& h : n_sample) {
    for (PointId y : Y.members) {
      if (tree.boundary_margin(y) < letters_of(h)) continue;
      const auto img = tree.act(h, y);
      if (img && !Y.contains(*img)) {
        throw precondition_error("N does not stabilize the seed: " +
                                 format_word(h, pres) + " moves " +
                                 sub.name(y) + " off it");
      }
    }
  }

  // hypothesis (ii): no nontrivial element of N fixes an apex
  for (const auto& h : n_sample) {
    for (PointId v : tree.apex_vertices()) {
      if (tree.act(h, v) == v) {
        throw precondition_error("element " + format_word(h, pres) +
                                 " of N fixes the apex " + sub.name(v));
      }
    }
  }

  // hypothesis (i) at every apex off the seed; apices inside the seed are
  // the next V and are exempt by the windmill convention
  std::mt19937_64 rng(opts.seed);
  for (PointId v : tree.apex_vertices()) {
    if (Y.contains(v)) continue;
    const RotationPair* p = family.pair_at(v);
    if (p == nullptr) continue;
    const auto hs = rotation_subgroup_sample(pres, family.filling, *p);
    const std::uint64_t full =
        std::uint64_t(hs.size()) * Y.size() * Y.size();
    const bool exhaustive = full <= opts.scan_budget / 64;
    std::uniform_int_distribution<std::size_t> pick(0, Y.members.size() - 1);
    for (const auto& h : hs) {
      const std::size_t trials = exhaustive ? Y.members.size() : 64;
      for (std::size_t a = 0; a < trials; ++a) {
        const PointId y = exhaustive ? Y.members[a] : Y.members[pick(rng)];
        for (std::size_t b = 0; b < trials; ++b) {
          const PointId y2 = exhaustive ? Y.members[b] : Y.members[pick(rng)];
          const auto hy2 = tree.act(h, y2);
          if (!hy2) continue;
          if (gromov_product(sub, y, *hy2, v) > 100 * opts.delta) {
            throw precondition_error(
                "large-angle hypothesis fails at " + sub.name(v) + " for " +
                format_word(h, pres) + " on " + sub.name(y) + ", " +
                sub.name(y2));
          }
        }
      }
    }
  }

  WindmillState st;
  st.W = Y;
  st.N_gens = N_gens;
  st.L_gens = N_gens;
  if (!N_gens.empty()) st.ledger.base = N_gens.front();
  st.last_S = Y;
  st.last_KS = Y;
  StageTrace t0;
  t0.stage = 0;
  t0.w_size = Y.size();
  st.trace.push_back(std::move(t0));
  return st;
}

WindmillState grow(const WindmillState& state, const TruncatedTree& tree,
                   const RotationFamily& family, const WindmillOptions& opts) {
  const auto& pres = tree.presentation();
  const auto& sub = tree.subdivided_metric();
  const Rat tenth = family.sigma / 10;
  const Rat three_tenth = 3 * family.sigma / 10;
  const Rat growth_r = std::max(tenth, tree.edge_scale());
  const Rat capture_r = std::max(three_tenth, tree.edge_scale());

  std::vector<PointId> A;
  for (PointId v : tree.apex_vertices()) {
    if (state.in_V(v)) continue;
    if (dist_to_subset(sub, v, state.W) <= capture_r) A.push_back(v);
  }

  WindmillState next = state;
  next.stage = state.stage + 1;
  next.last_A = A;
  StageTrace trace;
  trace.stage = next.stage;

  if (A.empty()) {
    PointSubset grown = neighborhood(sub, state.W, growth_r);
    if (grown.members == state.W.members) {
      throw precondition_error(
          "growth exhausted the ball; radius >= " +
          std::to_string(tree.radius() + 1) + " needed to continue");
    }
    next.W = std::move(grown);
    next.last_S = next.W;
    next.last_KS = next.W;
    trace.pure_neighborhood = true;
  } else {
    std::vector<PointId> wa = state.W.members;
    wa.insert(wa.end(), A.begin(), A.end());
    const PointSubset S = hull_of(sub, PointSubset::of(sub, std::move(wa)),
                                  opts.delta);

    // in-ball closure of K_A . S
    std::vector<GroupWord> ka_gens;
    for (PointId v : A) {
      const RotationPair* p = family.pair_at(v);
      if (p == nullptr) continue;
      const auto hs = rotation_subgroup_sample(pres, family.filling, *p);
      ka_gens.insert(ka_gens.end(), hs.begin(), hs.end());
    }
    std::vector<char> in_ks(std::size_t(tree.size()), 0);
    for (PointId x : S.members) in_ks[std::size_t(x)] = 1;
    std::vector<PointId> frontier = S.members;
    bool saturated = false;
    for (std::int64_t round = 0; round < opts.ka_rounds; ++round) {
      std::vector<PointId> added;
      for (PointId x : frontier) {
        for (const auto& g : ka_gens) {
          const auto img = tree.act(g, x);
          if (img && !in_ks[std::size_t(*img)]) {
            in_ks[std::size_t(*img)] = 1;
            added.push_back(*img);
          }
        }
      }
      if (added.empty()) {
        saturated = true;
        break;
      }
      frontier = std::move(added);
    }
    std::vector<PointId> ks;
    for (PointId x = 0; x < tree.size(); ++x) {
      if (in_ks[std::size_t(x)]) ks.push_back(x);
    }
    next.last_S = S;
    next.last_KS = PointSubset::of(sub, std::move(ks));
    next.W = neighborhood(sub, next.last_KS, growth_r);
    trace.saturated = saturated;

    // ledger: one factor per L-orbit of A, shortlex-minimal conjugator
    UnionFind uf(A.size());
    std::map<PointId, std::size_t> index;
    for (std::size_t i = 0; i < A.size(); ++i) index[A[i]] = i;
    for (const auto& l : subgroup_samples(state.L_gens, pres,
                                          opts.l_sample_powers, 128)) {
      for (std::size_t i = 0; i < A.size(); ++i) {
        const auto img = tree.act(l, A[i]);
        if (!img) continue;
        auto it = index.find(*img);
        if (it != index.end()) uf.unite(i, it->second);
      }
    }
    std::map<std::size_t, std::size_t> reps;  // root -> representative index
    for (std::size_t i = 0; i < A.size(); ++i) {
      const std::size_t r = uf.find(i);
      auto it = reps.find(r);
      if (it == reps.end()) {
        reps[r] = i;
      } else if (shortlex_less(tree.vertex(A[i]).rep,
                               tree.vertex(A[it->second]).rep, pres)) {
        it->second = i;
      }
    }
    std::vector<std::size_t> chosen;
    for (const auto& [root, i] : reps) chosen.push_back(i);
    std::sort(chosen.begin(), chosen.end(), [&](std::size_t a, std::size_t b) {
      return shortlex_less(tree.vertex(A[a]).rep, tree.vertex(A[b]).rep, pres);
    });
    for (std::size_t i : chosen) {
      const auto& vx = tree.vertex(A[i]);
      if (next.ledger.has(vx.factor, vx.rep)) continue;
      next.ledger.factors.push_back({vx.factor, vx.rep, next.stage, A[i]});
      trace.new_factors.push_back(format_word(vx.rep, pres) + " . P" +
                                  std::to_string(vx.factor));
    }
    for (PointId v : A) trace.captured.push_back(sub.name(v));
  }

  next.V = apices_in(tree, next.W);
  next.L_gens = state.N_gens;
  {
    auto rot = rotation_gens_for(tree, family, next.V);
    next.L_gens.insert(next.L_gens.end(), rot.begin(), rot.end());
  }
  trace.w_size = next.W.size();
  trace.v_size = static_cast<int>(next.V.size());
  next.trace.push_back(std::move(trace));
  return next;
}

SuiteReport verify_windmill(const WindmillState& state,
                            const TruncatedTree& tree,
                            const RotationFamily& family,
                            const WindmillOptions& opts) {
  const auto& pres = tree.presentation();
  const auto& sub = tree.subdivided_metric();
  SuiteReport report;
  std::mt19937_64 rng(opts.seed);

  {
    Check c{"w1_quasiconvex"};
    if (!connected_within(tree, state.W)) {
      c.record_violation("W is disconnected");
    } else {
      c.record(Rat(0), "connected");
    }
    if (state.W.size() <= 120) {
      c.record(quasiconvexity_defect(sub, state.W) - 2 * opts.delta,
               "exact defect");
    }
    report.checks.push_back(std::move(c));
  }

  {
    Check c{"w2_invariance"};
    for (const auto& l : subgroup_samples(state.L_gens, pres, 2, 64)) {
      const std::int64_t need = letters_of(l);
      for (PointId x : state.W.members) {
        if (tree.boundary_margin(x) < need) continue;
        const auto img = tree.act(l, x);
        if (!img) continue;
        if (!state.W.contains(*img)) {
          c.record_violation(format_word(l, pres) + " moves " + sub.name(x) +
                             " out of W");
        } else if (tree.vertex(x).kind == VertexKind::apex &&
                   state.in_V(x) && !state.in_V(*img)) {
          c.record_violation(format_word(l, pres) + " moves " + sub.name(x) +
                             " out of V");
        } else {
          c.record(Rat(0), "");
        }
      }
    }
    report.checks.push_back(std::move(c));
  }

  {
    Check c{"w3_large_angle"};
    for (PointId v : tree.apex_vertices()) {
      if (state.in_V(v) || state.W.contains(v)) continue;
      const RotationPair* p = family.pair_at(v);
      if (p == nullptr) continue;
      const auto hs = rotation_subgroup_sample(pres, family.filling, *p);
      const std::uint64_t full =
          std::uint64_t(hs.size()) * state.W.size() * state.W.size();
      const bool exhaustive = full <= opts.scan_budget / 64;
      std::uniform_int_distribution<std::size_t> pick(
          0, state.W.members.size() - 1);
      for (const auto& h : hs) {
        const std::size_t trials =
            exhaustive ? state.W.members.size() : 24;
        for (std::size_t a = 0; a < trials; ++a) {
          const PointId x =
              exhaustive ? state.W.members[a] : state.W.members[pick(rng)];
          for (std::size_t b = 0; b < trials; ++b) {
            const PointId x2 =
                exhaustive ? state.W.members[b] : state.W.members[pick(rng)];
            const auto hx2 = tree.act(h, x2);
            if (!hx2) continue;
            c.record(gromov_product(sub, x, *hx2, v) - 100 * opts.delta,
                     sub.name(x) + "," + sub.name(x2) + " at " + sub.name(v));
          }
        }
      }
    }
    report.checks.push_back(std::move(c));
  }

  {
    Check c{"w4_stabilizers"};
    for (const auto& l : subgroup_samples(state.L_gens, pres, 2, 64)) {
      if (is_trivial(l, pres)) continue;
      for (PointId v : tree.apex_vertices()) {
        if (state.in_V(v)) continue;
        if (tree.act(l, v) == v) {
          c.record_violation(format_word(l, pres) + " fixes " + sub.name(v) +
                             " outside V");
        } else {
          c.record(Rat(0), "");
        }
      }
    }
    report.checks.push_back(std::move(c));
  }

  {
    Check c{"lemma_v_near_w"};
    for (PointId v : state.V) {
      c.record(dist_to_subset(sub, v, state.W) - 4 * opts.delta, sub.name(v));
    }
    report.checks.push_back(std::move(c));
  }

  {
    Check c{"lemma_apex_product_105"};
    for (PointId v : state.last_A) {
      const RotationPair* p = family.pair_at(v);
      if (p == nullptr) continue;
      const auto hs = rotation_subgroup_sample(pres, family.filling, *p);
      std::uniform_int_distribution<std::size_t> pick(
          0, state.last_S.members.size() - 1);
      const bool exhaustive = std::uint64_t(hs.size()) *
                                  state.last_S.size() * state.last_S.size() <=
                              opts.scan_budget / 64;
      for (const auto& h : hs) {
        const std::size_t trials =
            exhaustive ? state.last_S.members.size() : 24;
        for (std::size_t a = 0; a < trials; ++a) {
          const PointId x = exhaustive ? state.last_S.members[a]
                                       : state.last_S.members[pick(rng)];
          for (std::size_t b = 0; b < trials; ++b) {
            const PointId y = exhaustive ? state.last_S.members[b]
                                         : state.last_S.members[pick(rng)];
            const auto hy = tree.act(h, y);
            if (!hy) continue;
            c.record(gromov_product(sub, x, *hy, v) - 105 * opts.delta,
                     sub.name(x) + "," + sub.name(y) + " at " + sub.name(v));
          }
        }
      }
    }
    if (c.checked == 0) c.status = CheckStatus::not_applicable;
    report.checks.push_back(std::move(c));
  }

  {
    Check c{"lemma_apex_near_s"};
    std::set<PointId> va(state.V.begin(), state.V.end());
    va.insert(state.last_A.begin(), state.last_A.end());
    for (PointId v : tree.apex_vertices()) {
      if (dist_to_subset(sub, v, state.last_S) > family.sigma / 5) continue;
      if (va.count(v) || state.W.contains(v)) {
        c.record(Rat(0), "");
      } else {
        c.record_violation(sub.name(v) + " is near S but not in V or A");
      }
    }
    report.checks.push_back(std::move(c));
  }

  {
    Check c{"lemma_ka_s_quasiconvex"};
    if (!connected_within(tree, state.last_KS)) {
      c.record_violation("K_A.S is disconnected");
    } else {
      c.record(Rat(0), "connected");
    }
    if (state.last_KS.size() <= 120) {
      c.record(quasiconvexity_defect(sub, state.last_KS) - 224 * opts.delta,
               "exact defect");
    }
    report.checks.push_back(std::move(c));
  }

  return report;
}

RotationDecomposition decompose(const GroupWord& g, const WindmillState& state,
                                const TruncatedTree& tree,
                                const RotationFamily& family,
                                const WindmillOptions& opts) {
  const auto& pres = tree.presentation();
  const auto& sub = tree.subdivided_metric();
  const auto& filling = family.filling;
  const GroupWord w = normal_form(g, pres);

  RotationDecomposition dec;

  // peel the base power so that the rest lies in the kernel
  GroupWord wk = w;
  if (state.ledger.base) {
    const GroupWord& g0 = *state.ledger.base;
    const std::int64_t limit =
        static_cast<std::int64_t>(to_syllables(w, pres).syllables.size()) + 4;
    bool found = kernel_membership(w, pres, filling);
    for (std::int64_t j = 1; !found && j <= limit; ++j) {
      for (const std::int64_t s : {j, -j}) {
        const GroupWord cand = mul(w, power_word(g0, -s, pres), pres);
        if (kernel_membership(cand, pres, filling)) {
          dec.base_power = s;
          wk = cand;
          found = true;
          break;
        }
      }
    }
    if (!found) {
      throw precondition_error("element lies outside <base, K>: " +
                               format_word(g, pres));
    }
    dec.tail = power_word(g0, dec.base_power, pres);
  } else {
    if (!kernel_membership(w, pres, filling)) {
      throw precondition_error("element lies outside the kernel: " +
                               format_word(g, pres));
    }
  }

  // Schreier rewriting of the kernel part against the shortlex transversal
  struct Block {
    int factor;
    GroupWord conj;
    std::int64_t power;
  };
  std::vector<Block> blocks;
  auto push_block = [&](int factor, GroupWord conj, std::int64_t power) {
    if (!blocks.empty() && blocks.back().factor == factor &&
        blocks.back().conj == conj) {
      blocks.back().power += power;
      if (blocks.back().power == 0) blocks.pop_back();
      return;
    }
    blocks.push_back({factor, std::move(conj), power});
  };
  GroupWord P;
  for (const Letter& x : wk.letters) {
    const GroupWord Px = mul(P, GroupWord{{x}}, pres);
    const GroupWord P2 =
        section_word(quotient_image(Px, pres, filling), pres, filling);
    const GroupWord s = mul(Px, inverse_word(P2), pres);
    if (!s.is_identity()) {
      // s = t n_i^c t^-1 with t the rep of P without its trailing syllable
      const GroupWord t = coset_representative(P, x.gen, pres);
      const GroupWord n = filling_generator(pres, filling, x.gen);
      std::int64_t c = 0;
      for (std::int64_t e = 1; e <= 4 && c == 0; ++e) {
        for (const std::int64_t cand : {e, -e}) {
          if (conjugate(t, power_word(n, cand, pres), pres) == s) {
            c = cand;
            break;
          }
        }
      }
      if (c == 0) {
        throw std::runtime_error("rewriting produced a non-elementary "
                                 "kernel block: " + format_word(s, pres));
      }
      push_block(x.gen, t, c);
    }
    P = P2;
  }
  if (!P.is_identity()) {
    throw std::runtime_error("rewriting left a nontrivial transversal tail");
  }

  GroupWord product;
  for (const auto& b : blocks) {
    RotationDecomposition::Piece piece;
    piece.factor = b.factor;
    piece.conjugator = b.conj;
    piece.power = b.power;
    piece.h = conjugate(
        b.conj, power_word(filling_generator(pres, filling, b.factor), b.power, pres),
        pres);
    const auto apex = tree.find_apex(b.factor, b.conj);
    piece.apex = apex ? *apex : PointId(-1);
    product = mul(product, piece.h, pres);
    dec.syllables.push_back(std::move(piece));
  }
  dec.m = static_cast<std::int64_t>(dec.syllables.size());
  product = mul(product, dec.tail, pres);
  if (!equal_elements(product, w, pres)) {
    throw std::runtime_error("decomposition does not reproduce the element");
  }
  for (std::size_t i = 1; i < dec.syllables.size(); ++i) {
    const auto& a = dec.syllables[i - 1];
    const auto& b = dec.syllables[i];
    if (a.factor == b.factor && a.conjugator == b.conjugator) {
      throw std::runtime_error("consecutive apices coincide");
    }
  }

  // Lemma chain y_0 .. y_{m+1} and its four conclusions
  SuiteReport& rep = dec.chain_report;
  const PointId y_base = state.last_S.empty() ? tree.identity_vertex()
                                              : state.last_S.members.front();
  std::vector<std::optional<PointId>> ys;
  ys.push_back(y_base);
  GroupWord gi;  // h_1 ... h_{i-1}
  for (std::int64_t i = 0; i < dec.m; ++i) {
    const auto& piece = dec.syllables[std::size_t(i)];
    if (piece.apex >= 0) {
      ys.push_back(tree.act(gi, piece.apex));
    } else {
      ys.push_back(std::nullopt);
    }
    gi = mul(gi, piece.h, pres);
  }
  ys.push_back(tree.act(mul(gi, dec.tail, pres), y_base));

  {
    Check c{"chain_points_in_s"};
    for (std::size_t i = 1; i + 1 < ys.size(); ++i) {
      const auto& piece = dec.syllables[i - 1];
      if (piece.apex < 0) continue;
      if (state.W.contains(piece.apex) ||
          std::binary_search(state.last_A.begin(), state.last_A.end(),
                             piece.apex)) {
        c.record(Rat(0), "");
      } else {
        c.record_violation("apex " + sub.name(piece.apex) +
                           " outside the windmill region");
      }
    }
    if (c.checked == 0) c.status = CheckStatus::not_applicable;
    rep.checks.push_back(std::move(c));
  }
  {
    Check c{"chain_gaps_sigma"};
    for (std::size_t i = 1; i + 2 < ys.size(); ++i) {
      if (!ys[i] || !ys[i + 1]) continue;
      c.record(family.sigma - sub.dist(*ys[i], *ys[i + 1]),
               "y_" + std::to_string(i));
    }
    if (c.checked == 0) c.status = CheckStatus::not_applicable;
    rep.checks.push_back(std::move(c));
  }
  {
    Check c{"chain_gromov_110"};
    for (std::size_t i = 1; i < ys.size() - 1; ++i) {
      for (std::size_t j = i; j < ys.size() - 1; ++j) {
        for (std::size_t k = j; k < ys.size() - 1; ++k) {
          if (!ys[i] || !ys[j] || !ys[k]) continue;
          c.record(gromov_product(sub, *ys[i], *ys[k], *ys[j]) -
                       110 * opts.delta,
                   "y_" + std::to_string(i) + ",y_" + std::to_string(k) +
                       " at y_" + std::to_string(j));
        }
      }
    }
    if (c.checked == 0) c.status = CheckStatus::not_applicable;
    rep.checks.push_back(std::move(c));
  }
  {
    Check c{"chain_projection_218"};
    if (ys.front() && ys.back()) {
      std::mt19937_64 rng(opts.seed);
      std::uniform_int_distribution<int> pick(0, tree.size() - 1);
      const int trials = tree.size() <= 200 ? tree.size() : 200;
      for (int t = 0; t < trials; ++t) {
        const PointId x = tree.size() <= 200 ? PointId(t) : PointId(pick(rng));
        const Rat bound = gromov_product(sub, *ys.front(), *ys.back(), x) +
                          218 * opts.delta;
        std::optional<Rat> best;
        for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
          if (!ys[i] || !ys[i + 1]) continue;
          const Rat p = gromov_product(sub, *ys[i + 1], *ys[i], x);
          if (!best || p < *best) best = p;
        }
        if (!best) continue;
        c.record(*best - bound, "x = " + sub.name(x));
      }
    }
    if (c.checked == 0) c.status = CheckStatus::not_applicable;
    rep.checks.push_back(std::move(c));
  }
  return dec;
}

TrichotomyCase trichotomy(const GroupWord& g, const WindmillState& state,
                          const TruncatedTree& tree,
                          const RotationFamily& family,
                          const WindmillOptions& opts) {
  const auto& sub = tree.subdivided_metric();
  auto dec = decompose(g, state, tree, family, opts);
  if (dec.m == 0) return TrichotomyCase::in_L;
  if (dec.m == 1 && dec.base_power == 0) return TrichotomyCase::rotation;
  const Rat bound = family.sigma - 440 * opts.delta;
  for (PointId y : state.last_S.members) {
    const auto gy = tree.act(normal_form(g, tree.presentation()), y);
    if (!gy) continue;
    if (sub.dist(*gy, y) < bound) {
      throw std::runtime_error("displacement bound fails at " + sub.name(y));
    }
  }
  return TrichotomyCase::displaced;
}

ReducedPreimage find_reduced_preimage(const GroupWord& g_bar,
                                      const TruncatedTree& tree,
                                      const RotationFamily& family,
                                      std::int64_t search_len,
                                      const WindmillOptions& opts) {
  const auto& pres = tree.presentation();
  const auto& sub = tree.subdivided_metric();
  const auto& filling = family.filling;
  if (const auto order = image_order(g_bar, pres, filling)) {
    throw precondition_error("image has finite order " +
                             std::to_string(*order) +
                             "; no loxodromic preimage exists");
  }
  const GroupWord g0 = normal_form(g_bar, pres);

  struct Scored {
    GroupWord g;
    GroupWord shift;
    std::int64_t syl;
    std::int64_t len;
  };
  auto score_of = [&](const GroupWord& c) {
    return std::pair<std::int64_t, std::int64_t>{
        static_cast<std::int64_t>(cyclic_reduction(c, pres).core.syllables.size()),
        word_length(c, pres)};
  };
  auto better = [&](const Scored& a, const Scored& b) {
    if (a.syl != b.syl) return a.syl < b.syl;
    if (a.len != b.len) return a.len < b.len;
    return shortlex_less(a.g, b.g, pres);
  };

  std::vector<Scored> pool;
  auto push = [&](GroupWord u) {
    GroupWord c = mul(u, g0, pres);
    const auto [syl, len] = score_of(c);
    pool.push_back({std::move(c), std::move(u), syl, len});
  };

  // greedy accelerator over the conjugated filling generators
  {
    const auto s0 = score_of(g0);
    Scored cur{g0, {}, s0.first, s0.second};
    const auto gens = kernel_generators(family, tree);
    for (int it = 0; it < 24; ++it) {
      bool improved = false;
      for (const auto& h : gens) {
        for (const GroupWord& step : {h, inverse_word(h)}) {
          const GroupWord u2 = mul(step, cur.shift, pres);
          GroupWord c = mul(u2, g0, pres);
          const auto [syl, len] = score_of(c);
          Scored cand{std::move(c), u2, syl, len};
          if (better(cand, cur)) {
            cur = std::move(cand);
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
    pool.push_back(cur);
  }

  std::int64_t candidates = 0;
  for (const auto& u : enumerate_ball(pres, search_len)) {
    if (!kernel_membership(u, pres, filling)) continue;
    ++candidates;
    push(u);
  }
  std::sort(pool.begin(), pool.end(), better);
  pool.erase(std::unique(pool.begin(), pool.end(),
                         [&](const Scored& a, const Scored& b) {
                           return a.g == b.g;
                         }),
             pool.end());

  std::string first_failure;
  for (const auto& cand : pool) {
    if (cand.syl < 2) continue;  // elliptic, cannot be the reduced preimage
    SuiteReport cert;
    Check c{"reduced_cylinder_scan"};
    const auto ax = axis_and_cylinder(tree, cand.g, sub, opts.delta);
    bool ok = true;
    for (const auto& p : family.pairs) {
      const auto hs = rotation_subgroup_sample(pres, filling, p);
      for (const auto& h : hs) {
        for (PointId y : ax.cylinder.members) {
          const auto hy = tree.act(h, y);
          if (!hy) continue;
          for (PointId y2 : ax.cylinder.members) {
            const Rat slack =
                gromov_product(sub, *hy, y2, p.apex) - 100 * opts.delta;
            c.record(slack, sub.name(y) + "," + sub.name(y2) + " at " +
                                sub.name(p.apex));
            if (slack > 0) ok = false;
          }
          if (!ok) break;
        }
        if (!ok) break;
      }
      if (!ok) break;
    }
    if (ok) {
      cert.checks.push_back(std::move(c));
      ReducedPreimage out;
      out.g = cand.g;
      out.shift = cand.shift;
      out.translation = 2 * tree.edge_scale() * cand.syl;
      out.candidates = candidates;
      out.certificate = std::move(cert);
      return out;
    }
    if (first_failure.empty()) {
      first_failure = format_word(cand.g, pres) + ": " + c.witness;
    }
  }
  throw precondition_error(
      "no candidate preimage certifies as reduced within search length " +
      std::to_string(search_len) + "; best failure: " + first_failure);
}

namespace {

StructureResult run_growth(WindmillState st, const TruncatedTree& tree,
                           const RotationFamily& family,
                           const WindmillOptions& opts) {
  for (int guard = 0; guard < 64; ++guard) {
    try {
      st = grow(st, tree, family, opts);
    } catch (const precondition_error&) {
      break;
    }
  }
  StructureResult out;
  out.ledger = st.ledger;
  out.state = std::move(st);
  return out;
}

}  // namespace

StructureResult preimage_structure(const GroupWord& g_bar,
                                   const TruncatedTree& tree,
                                   const RotationFamily& family,
                                   std::int64_t search_len,
                                   const WindmillOptions& opts) {
  const auto& sub = tree.subdivided_metric();
  auto reduced = find_reduced_preimage(g_bar, tree, family, search_len, opts);
  const auto ax = axis_and_cylinder(tree, reduced.g, sub, opts.delta);
  auto st = init_windmill(tree, family, ax.cylinder, {reduced.g}, opts);
  auto out = run_growth(std::move(st), tree, family, opts);
  out.reduced = std::move(reduced);
  return out;
}

StructureResult kernel_structure(const TruncatedTree& tree,
                                 const RotationFamily& family,
                                 const WindmillOptions& opts) {
  const auto& sub = tree.subdivided_metric();
  const PointSubset seed = PointSubset::of(sub, {tree.base_apex(0)});
  auto st = init_windmill(tree, family, seed, {}, opts);
  return run_growth(std::move(st), tree, family, opts);
}

nlohmann::json trace_to_json(const WindmillState& state) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& t : state.trace) {
    stages.push_back({{"stage", t.stage},
                      {"captured", t.captured},
                      {"w_size", t.w_size},
                      {"v_size", t.v_size},
                      {"new_factors", t.new_factors},
                      {"saturated", t.saturated},
                      {"pure_neighborhood", t.pure_neighborhood}});
  }
  return {{"stages", stages}};
}

}  // namespace dehnfill
