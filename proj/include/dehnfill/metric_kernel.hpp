#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dehnfill/metric_space.hpp"
#include "dehnfill/rational.hpp"
#include "dehnfill/report.hpp"

namespace dehnfill {

/// Gromov product <x,y>_z = (d(x,z)+d(y,z)-d(x,y))/2.
Rat gromov_product(const FiniteMetricSpace& s, PointId x, PointId y,
                   PointId z);

/// d(x, Y) over the members of Y. input_error on empty Y.
Rat dist_to_subset(const FiniteMetricSpace& s, PointId x, const PointSubset& Y);

struct DeltaOptions {
  bool exact = true;
  std::uint64_t sample_count = 0;  // sampled mode
  std::uint64_t seed = 0;
};

struct DeltaResult {
  Rat delta;            // minimal constant for the four-point inequality
  Rat dual_delta;       // minimal constant for the distance-sum form
  bool exact = true;    // false => delta is a lower bound over samples
  std::uint64_t quadruples = 0;
};

/// Minimal hyperbolicity constant of the space, computed through both
/// four-point formulations; the two minima are asserted to agree.
DeltaResult hyperbolicity_delta(const FiniteMetricSpace& s,
                                const DeltaOptions& opts = {});

/// Minimal alpha with d(x,Y) <= <y,y'>_x + alpha for all x and y,y' in Y.
Rat quasiconvexity_defect(const FiniteMetricSpace& s, const PointSubset& Y);

/// eta-projection of x on Y; smallest point id among points within eta of
/// the minimum, so the choice is deterministic.
PointId project(const FiniteMetricSpace& s, PointId x, const PointSubset& Y,
                const Rat& eta);

/// {x : d(x,Y) <= radius}.
PointSubset neighborhood(const FiniteMetricSpace& s, const PointSubset& Y,
                         const Rat& radius);

/// Taut-point approximation of the hull:
/// {p : exists y,y' in Y with d(y,p)+d(p,y') <= d(y,y') + slack}.
PointSubset hull(const FiniteMetricSpace& s, const PointSubset& Y,
                 const Rat& slack);

struct QuasiGeodesicCheck {
  bool ok = true;
  int i = -1, j = -1;      // first violating index pair
  std::string side;        // "lower" or "upper"
};

/// True iff every index pair at arc-length gap <= L satisfies the two-sided
/// (k,l) quasi-isometry inequality. Paths with fewer than 2 points pass
/// vacuously.
QuasiGeodesicCheck check_local_quasigeodesic(const DiscretePath& path,
                                             const Rat& L, const Rat& k,
                                             const Rat& l);

struct SuiteOptions {
  Rat delta;                     // hyperbolicity constant to assert against
  bool exhaustive = false;       // else sampled
  std::uint64_t sample_count = 20000;
  std::uint64_t seed = 0;
  std::uint64_t subset_samples = 12;   // sampled subsets Y per family
  Rat hull_slack = Rat(0);             // slack handed to hull()
  Rat chain_gap = Rat(0);              // minimal gap for discrete chains
  Rat chain_l = Rat(0);                // product bound l for chain hypotheses
  std::vector<std::vector<PointId>> chains;  // explicit chains, on top of
                                             // the auto-generated ones
};

/// Sampled (or exhaustive) verification of the basic metric inequalities:
/// the thin-triangle inequality, projections on quasi-convex subsets,
/// neighborhoods, hulls, hull Gromov products and discrete chain stability.
SuiteReport verify_metric_lemma_suite(const FiniteMetricSpace& s,
                                      const SuiteOptions& opts);

}  // namespace dehnfill
