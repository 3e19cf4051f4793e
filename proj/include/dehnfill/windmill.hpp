#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dehnfill/group.hpp"
#include "dehnfill/report.hpp"
#include "dehnfill/rotation.hpp"
#include "dehnfill/tree.hpp"

namespace dehnfill {

/// One conjugated rotation subgroup N_i^t in a free-factor ledger.
struct LedgerFactor {
  int factor = 0;
  GroupWord conjugator;  // shortlex coset representative
  int stage = 0;         // grow step that added the factor
  PointId apex = -1;     // in-ball apex, or -1
};

/// Free product certificate: base * ( *_i *_t N_i^t ).
struct FreeFactorLedger {
  std::optional<GroupWord> base;  // infinite cyclic <g>, or trivial
  std::vector<LedgerFactor> factors;

  bool has(int factor, const GroupWord& conjugator) const;
  nlohmann::json to_json(const FreeProductPresentation& pres) const;
};

/// Per-stage trace entry for the replayable growth log.
struct StageTrace {
  int stage = 0;
  std::vector<std::string> captured;  // apex names of A
  int w_size = 0;
  int v_size = 0;
  std::vector<std::string> new_factors;
  bool saturated = true;
  bool pure_neighborhood = false;
};

struct WindmillState {
  PointSubset W;
  std::vector<GroupWord> N_gens;  // empty, or one loxodromic generator
  std::vector<PointId> V;         // sorted apex ids
  std::vector<GroupWord> L_gens;  // N_gens plus rotation gens of V
  FreeFactorLedger ledger;
  int stage = 0;

  // intermediates of the last grow step, used by the verification lemmas
  std::vector<PointId> last_A;
  PointSubset last_S;
  PointSubset last_KS;  // in-ball part of K_A . S
  std::vector<StageTrace> trace;

  bool in_V(PointId v) const;
};

struct WindmillOptions {
  Rat delta{0};
  std::uint64_t seed = 0;
  std::int64_t ka_rounds = 4;        // K_A . S closure word bound (syllables)
  std::int64_t l_sample_powers = 3;  // generator powers for invariance scans
  std::uint64_t scan_budget = 2'000'000;  // exhaustive-vs-sampled threshold
};

/// Stage-0 windmill at a quasi-convex seed. Hypotheses checked on the spot:
/// quasi-convexity of Y, N stabilizes Y, the large-angle condition at every
/// apex off Y, and trivial apex stabilizers in N. precondition_error with a
/// witness on any failure.
WindmillState init_windmill(const TruncatedTree& tree,
                            const RotationFamily& family, const PointSubset& Y,
                            const std::vector<GroupWord>& N_gens,
                            const WindmillOptions& opts);

/// One growth step. Captures A (apices within 3*sigma/10, at least one edge),
/// takes the hull S, closes under K_A, widens, and extends the ledger by one
/// factor per L-orbit of A. precondition_error when the step cannot add
/// anything (ball margin exhausted), naming the radius needed.
WindmillState grow(const WindmillState& state, const TruncatedTree& tree,
                   const RotationFamily& family, const WindmillOptions& opts);

/// W1-W4 plus the apex-product, apex-near-S and K_A.S quasi-convexity lemmas.
SuiteReport verify_windmill(const WindmillState& state,
                            const TruncatedTree& tree,
                            const RotationFamily& family,
                            const WindmillOptions& opts);

/// g = h_1 ... h_m u against a ledger: h_i in conjugated rotation groups with
/// consecutive apices distinct, u a power of the base.
struct RotationDecomposition {
  struct Piece {
    GroupWord h;
    int factor = 0;
    GroupWord conjugator;
    std::int64_t power = 0;  // h = t n_i^power t^-1
    PointId apex = -1;
  };
  std::vector<Piece> syllables;
  GroupWord tail;             // u, a base power
  std::int64_t base_power = 0;
  std::int64_t m = 0;
  SuiteReport chain_report;   // Lemma conclusions along y_0..y_{m+1}
};

/// precondition_error when g lies outside <base, kernel>.
RotationDecomposition decompose(const GroupWord& g, const WindmillState& state,
                                const TruncatedTree& tree,
                                const RotationFamily& family,
                                const WindmillOptions& opts);

enum class TrichotomyCase { in_L, rotation, displaced };

/// Lemma-style trichotomy; the displaced case verifies
/// d(gy, y) >= sigma - 440*delta on the in-ball part of S.
TrichotomyCase trichotomy(const GroupWord& g, const WindmillState& state,
                          const TruncatedTree& tree,
                          const RotationFamily& family,
                          const WindmillOptions& opts);

struct ReducedPreimage {
  GroupWord g;
  GroupWord shift;  // u in K with g = u * g0
  Rat translation{0};
  std::int64_t candidates = 0;
  SuiteReport certificate;  // reduced-element scan along the cylinder
};

/// Shortest preimage of g_bar modulo K within the search ball, certified
/// reduced. precondition_error for finite-order images; precondition_error
/// with the best witness when no candidate certifies.
ReducedPreimage find_reduced_preimage(const GroupWord& g_bar,
                                      const TruncatedTree& tree,
                                      const RotationFamily& family,
                                      std::int64_t search_len,
                                      const WindmillOptions& opts);

struct StructureResult {
  ReducedPreimage reduced;  // base variant only
  WindmillState state;
  FreeFactorLedger ledger;
};

/// Thm-(iii) pipeline: reduced preimage g, windmill seeded at its cylinder
/// with N = <g>, grown until the ball margin is exhausted.
StructureResult preimage_structure(const GroupWord& g_bar,
                                   const TruncatedTree& tree,
                                   const RotationFamily& family,
                                   std::int64_t search_len,
                                   const WindmillOptions& opts);

/// Thm-(ii) pipeline: trivial N, seeded at the base apex; the ledger
/// describes the kernel itself on the reached region.
StructureResult kernel_structure(const TruncatedTree& tree,
                                 const RotationFamily& family,
                                 const WindmillOptions& opts);

nlohmann::json trace_to_json(const WindmillState& state);

}  // namespace dehnfill
