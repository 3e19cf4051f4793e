#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dehnfill/group.hpp"
#include "dehnfill/report.hpp"
#include "dehnfill/tree.hpp"

namespace dehnfill {

/// One rotation subgroup N_i^t together with its apex t*v_i.
struct RotationPair {
  int factor = 0;
  GroupWord conjugator;  // shortlex coset representative
  PointId apex = -1;
};

/// Sigma-rotation family induced by a filling on the subdivided tree ball.
struct RotationFamily {
  std::vector<RotationPair> pairs;
  Rat sigma{2};
  FillingSpec filling;

  const RotationPair* pair_at(PointId apex) const;
  nlohmann::json to_json(const TruncatedTree& tree) const;
};

/// Exclusion set Phi of Thm-style hypotheses; empty in the tree model but
/// honored when nonempty.
struct ExclusionSet {
  std::vector<GroupWord> elements;
};

/// Normal generator of N_i inside P_i (a_i^k, or a_i^{k} in Z/m).
GroupWord filling_generator(const FreeProductPresentation& pres,
                            const FillingSpec& filling, int factor);

/// Nontrivial sample of N_i^t for axiom scans.
std::vector<GroupWord> rotation_subgroup_sample(
    const FreeProductPresentation& pres, const FillingSpec& filling,
    const RotationPair& pair, std::int64_t power_bound = 3);

/// One pair per in-ball apex. precondition_error when some N_i is trivial
/// (k_i equal to a finite factor's order).
RotationFamily build_family(const TruncatedTree& tree,
                            const FillingSpec& filling, const Rat& sigma);

struct RotationSuiteOptions {
  Rat delta{0};
  std::uint64_t seed = 0;
  std::int64_t r3_word_length = 3;
  std::uint64_t lemma_samples = 64;
};

/// Def 3.1 axioms: R1 (d(hx,x) = 2 d(v,x) near the apex, exhaustive on the
/// interior), R2 (apex separation >= sigma, exhaustive), R3 (G-invariance,
/// sampled). precondition_error when the ball margin is too small.
SuiteReport verify_axioms(const RotationFamily& family,
                          const TruncatedTree& tree,
                          const RotationSuiteOptions& opts);

/// Rotation lemmas: Gromov product <x,hx>_v <= 2*delta, and the far
/// quasi-convex variant (3*delta) for sampled axes and balls.
SuiteReport verify_rotation_lemmas(const RotationFamily& family,
                                   const TruncatedTree& tree,
                                   const RotationSuiteOptions& opts);

/// Conjugated normal generators t n_i t^-1, one per pair, shortlex order.
std::vector<GroupWord> kernel_generators(const RotationFamily& family,
                                         const TruncatedTree& tree);

/// Proper action off apices: every nontrivial K-word up to max_len that
/// fixes a vertex fixes only apices.
SuiteReport verify_proper_action(const TruncatedTree& tree,
                                 const FillingSpec& filling,
                                 std::int64_t max_len);

/// Quotient of the subdivided ball by the K-orbit identification; a forest
/// image of the filled quotient's own tree, hence exactly 0-hyperbolic for
/// honest fillings.
FiniteMetricSpace build_quotient_space(const TruncatedTree& tree,
                                       const FillingSpec& filling);

}  // namespace dehnfill
