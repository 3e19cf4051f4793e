#include "dehnfill/metric_kernel.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <random>

#include "dehnfill/errors.hpp"

namespace dehnfill {

namespace {

std::string pts(const FiniteMetricSpace& s,
                std::initializer_list<PointId> ids) {
  std::string out;
  for (PointId p : ids) {
    if (!out.empty()) out += ",";
    out += s.name(p);
  }
  return out;
}

// 2*<x,y>_z in ticks.
std::int64_t gro2(const std::int64_t* d, std::size_t n, PointId x, PointId y,
                  PointId z) {
  return d[std::size_t(x) * n + z] + d[std::size_t(y) * n + z] -
         d[std::size_t(x) * n + y];
}

}  // namespace

Rat gromov_product(const FiniteMetricSpace& s, PointId x, PointId y,
                   PointId z) {
  s.check_point(x);
  s.check_point(y);
  s.check_point(z);
  return s.tick_scale() *
         gro2(s.tick_matrix().data(), std::size_t(s.size()), x, y, z) / 2;
}

Rat dist_to_subset(const FiniteMetricSpace& s, PointId x,
                   const PointSubset& Y) {
  if (Y.empty()) throw input_error("empty subset has no distance");
  std::int64_t best = s.ticks(x, Y.members.front());
  for (PointId y : Y.members) best = std::min(best, s.ticks(x, y));
  return s.tick_scale() * best;
}

DeltaResult hyperbolicity_delta(const FiniteMetricSpace& s,
                                const DeltaOptions& opts) {
  const std::size_t n = std::size_t(s.size());
  const auto* d = s.tick_matrix().data();
  DeltaResult res;
  res.exact = opts.exact;

  if (n < 4) {
    // A metric space on at most 3 points is 0-hyperbolic.
    res.delta = res.dual_delta = Rat(0);
    res.exact = true;
    return res;
  }

  // Both defects for one labelled 4-set, in doubled ticks.
  auto four_set_defects = [&](const std::array<PointId, 4>& q,
                              std::int64_t& eq1, std::int64_t& eq2) {
    eq1 = 0;
    for (int ti = 0; ti < 4; ++ti) {
      for (int yi = 0; yi < 4; ++yi) {
        if (yi == ti) continue;
        int rest[2], r = 0;
        for (int c = 0; c < 4; ++c) {
          if (c != ti && c != yi) rest[r++] = c;
        }
        const PointId x = q[std::size_t(rest[0])], z = q[std::size_t(rest[1])],
                      y = q[std::size_t(yi)], t = q[std::size_t(ti)];
        const std::int64_t def =
            std::min(gro2(d, n, x, y, t), gro2(d, n, y, z, t)) -
            gro2(d, n, x, z, t);
        eq1 = std::max(eq1, def);
      }
    }
    std::array<std::int64_t, 3> sums = {
        d[std::size_t(q[0]) * n + q[1]] + d[std::size_t(q[2]) * n + q[3]],
        d[std::size_t(q[0]) * n + q[2]] + d[std::size_t(q[1]) * n + q[3]],
        d[std::size_t(q[0]) * n + q[3]] + d[std::size_t(q[1]) * n + q[2]]};
    std::sort(sums.begin(), sums.end());
    eq2 = sums[2] - sums[1];
  };

  std::int64_t best1 = 0, best2 = 0;
  if (opts.exact) {
    // Four-point inequality, all ordered quadruples (x <-> z symmetry).
    for (std::size_t t = 0; t < n; ++t) {
      const auto* dt = d + t * n;
      for (std::size_t y = 0; y < n; ++y) {
        const auto* dy = d + y * n;
        for (std::size_t x = 0; x < n; ++x) {
          const auto* dx = d + x * n;
          const std::int64_t axy = dt[x] + dt[y] - dy[x];
          const std::int64_t cx = -dt[x];
          for (std::size_t z = x; z < n; ++z) {
            const std::int64_t ayz = dt[z] + dt[y] - dy[z];
            const std::int64_t def =
                std::min(axy, ayz) - dt[z] + dx[z] + cx;
            if (def > best1) best1 = def;
          }
        }
      }
    }
    // Distance-sum form, unordered 4-sets.
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const std::int64_t dij = d[i * n + j];
        for (std::size_t k = j + 1; k < n; ++k) {
          const std::int64_t dik = d[i * n + k], djk = d[j * n + k];
          for (std::size_t l = k + 1; l < n; ++l) {
            std::array<std::int64_t, 3> sums = {dij + d[k * n + l],
                                                dik + d[j * n + l],
                                                d[i * n + l] + djk};
            std::sort(sums.begin(), sums.end());
            if (sums[2] - sums[1] > best2) best2 = sums[2] - sums[1];
          }
        }
      }
    }
    res.quadruples = std::uint64_t(n) * n * n * n;
  } else {
    std::mt19937_64 rng(opts.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::uint64_t it = 0; it < opts.sample_count; ++it) {
      std::array<PointId, 4> q{};
      std::size_t filled = 0;
      while (filled < 4) {
        const PointId c = PointId(pick(rng));
        bool dup = false;
        for (std::size_t f = 0; f < filled; ++f) dup |= (q[f] == c);
        if (!dup) q[filled++] = c;
      }
      std::int64_t e1 = 0, e2 = 0;
      four_set_defects(q, e1, e2);
      best1 = std::max(best1, e1);
      best2 = std::max(best2, e2);
    }
    res.quadruples = opts.sample_count;
  }

  res.delta = s.tick_scale() * best1 / 2;
  res.dual_delta = s.tick_scale() * best2 / 2;
  return res;
}

Rat quasiconvexity_defect(const FiniteMetricSpace& s, const PointSubset& Y) {
  if (Y.empty()) throw input_error("quasiconvexity defect of an empty subset");
  const std::size_t n = std::size_t(s.size());
  const auto* d = s.tick_matrix().data();

  std::vector<std::int64_t> dy(n);
  for (std::size_t x = 0; x < n; ++x) {
    std::int64_t best = d[x * n + std::size_t(Y.members.front())];
    for (PointId y : Y.members) best = std::min(best, d[x * n + std::size_t(y)]);
    dy[x] = best;
  }

  std::int64_t worst2 = 0;  // doubled ticks
  for (std::size_t x = 0; x < n; ++x) {
    const auto* dx = d + x * n;
    for (std::size_t a = 0; a < Y.members.size(); ++a) {
      const std::size_t y = std::size_t(Y.members[a]);
      for (std::size_t b = a; b < Y.members.size(); ++b) {
        const std::size_t y2 = std::size_t(Y.members[b]);
        const std::int64_t g2 = dx[y] + dx[y2] - d[y * n + y2];
        worst2 = std::max(worst2, 2 * dy[x] - g2);
      }
    }
  }
  return s.tick_scale() * worst2 / 2;
}

PointId project(const FiniteMetricSpace& s, PointId x, const PointSubset& Y,
                const Rat& eta) {
  if (Y.empty()) throw input_error("projection on an empty subset");
  if (eta < 0) throw input_error("projection tolerance must be >= 0");
  s.check_point(x);
  std::int64_t best = s.ticks(x, Y.members.front());
  for (PointId y : Y.members) best = std::min(best, s.ticks(x, y));
  const Rat cutoff = s.tick_scale() * best + eta;
  for (PointId y : Y.members) {  // members are sorted: first hit wins
    if (s.tick_scale() * s.ticks(x, y) <= cutoff) return y;
  }
  return Y.members.front();  // unreachable
}

PointSubset neighborhood(const FiniteMetricSpace& s, const PointSubset& Y,
                         const Rat& radius) {
  if (radius < 0) throw input_error("neighborhood radius must be >= 0");
  std::vector<PointId> out;
  for (PointId x = 0; x < s.size(); ++x) {
    std::int64_t best = Y.empty() ? -1 : s.ticks(x, Y.members.front());
    for (PointId y : Y.members) best = std::min(best, s.ticks(x, y));
    if (!Y.empty() && s.tick_scale() * best <= radius) out.push_back(x);
  }
  return PointSubset::of(s, std::move(out));
}

PointSubset hull(const FiniteMetricSpace& s, const PointSubset& Y,
                 const Rat& slack) {
  if (Y.empty()) throw input_error("hull of an empty subset");
  if (slack < 0) throw input_error("hull slack must be >= 0");
  std::vector<PointId> out;
  for (PointId p = 0; p < s.size(); ++p) {
    bool in = false;
    for (std::size_t a = 0; a < Y.members.size() && !in; ++a) {
      for (std::size_t b = a; b < Y.members.size() && !in; ++b) {
        const PointId y = Y.members[a], y2 = Y.members[b];
        const std::int64_t excess =
            s.ticks(y, p) + s.ticks(p, y2) - s.ticks(y, y2);
        in = s.tick_scale() * excess <= slack;
      }
    }
    if (in) out.push_back(p);
  }
  return PointSubset::of(s, std::move(out));
}

QuasiGeodesicCheck check_local_quasigeodesic(const DiscretePath& path,
                                             const Rat& L, const Rat& k,
                                             const Rat& l) {
  if (k < 1 || l < 0 || L < 0) {
    throw input_error("quasi-geodesic parameters need k >= 1, l >= 0, L >= 0");
  }
  QuasiGeodesicCheck res;
  if (path.points.size() < 2) return res;
  const auto& s = *path.space;
  for (std::size_t i = 0; i + 1 < path.points.size(); ++i) {
    for (std::size_t j = i + 1; j < path.points.size(); ++j) {
      const Rat gap = path.lengths[j] - path.lengths[i];
      if (gap > L) break;
      const Rat dij = s.dist(path.points[i], path.points[j]);
      if (dij / k - l > gap) {
        return {false, int(i), int(j), "lower"};
      }
      if (gap > k * dij + l) {
        return {false, int(i), int(j), "upper"};
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Lemma suite
// ---------------------------------------------------------------------------

namespace {

struct SubsetSampler {
  const FiniteMetricSpace& s;
  std::mt19937_64& rng;

  PointId point() {
    return PointId(std::uniform_int_distribution<int>(0, s.size() - 1)(rng));
  }

  PointSubset subset(std::uint64_t style) {
    switch (style % 4) {
      case 0: {  // ball, radius clipped so the subset stays small
        const PointId c = point();
        std::int64_t r = s.ticks(c, point()) / 2;
        if (s.size() > 32) {
          std::vector<std::int64_t> near;
          near.reserve(std::size_t(s.size()));
          for (PointId p = 0; p < s.size(); ++p) near.push_back(s.ticks(c, p));
          std::nth_element(near.begin(), near.begin() + 24, near.end());
          r = std::min(r, near[24]);
        }
        std::vector<PointId> m;
        for (PointId p = 0; p < s.size(); ++p) {
          if (s.ticks(c, p) <= r) m.push_back(p);
        }
        return PointSubset::of(s, std::move(m));
      }
      case 1:  // geodesic between two random points
        return hull(s, PointSubset::of(s, {point(), point()}), Rat(0));
      case 2: {  // scatter
        std::vector<PointId> m = {point(), point(), point()};
        return PointSubset::of(s, std::move(m));
      }
      default:  // hull of a scatter
        return hull(s, PointSubset::of(s, {point(), point(), point()}),
                    Rat(0));
    }
  }
};

}  // namespace

SuiteReport verify_metric_lemma_suite(const FiniteMetricSpace& s,
                                      const SuiteOptions& opts) {
  const std::size_t n = std::size_t(s.size());
  if (n == 0) throw input_error("empty space");
  const Rat& delta = opts.delta;
  std::mt19937_64 rng(opts.seed);
  SubsetSampler sampler{s, rng};
  SuiteReport report;

  // --- minimal-constant agreement + precondition ---
  {
    DeltaOptions dopts;
    dopts.exact = n <= 48 || (opts.exhaustive && n <= 64);
    dopts.sample_count = opts.sample_count;
    dopts.seed = opts.seed;
    DeltaResult dr = hyperbolicity_delta(s, dopts);
    Check c{"eq1_eq2_minimal_agreement"};
    c.checked = dr.quadruples;
    if (dr.delta != dr.dual_delta) {
      c.record_violation("eq1 minimum " + format_rational(dr.delta) +
                         " != eq2 minimum " + format_rational(dr.dual_delta));
    }
    Rat true_lower = dr.delta;
    if (s.is_tree_metric() && true_lower != 0) {
      c.record_violation("tree metric scanned nonzero delta");
    }
    if (true_lower > delta) {
      throw precondition_error(
          "supplied delta " + format_rational(delta) +
          " is below the witnessed hyperbolicity constant " +
          format_rational(true_lower));
    }
    report.checks.push_back(std::move(c));
  }

  const auto* d = s.tick_matrix().data();
  const Rat& scale = s.tick_scale();

  // --- Eq. (3), thin-triangle inequality ---
  {
    Check c{"eq3_thin_triangle"};
    auto probe = [&](PointId x, PointId y, PointId z, PointId q) {
      const std::int64_t lhs2 = gro2(d, n, x, y, q);
      const std::int64_t rhs2 =
          std::max(2 * d[std::size_t(x) * n + q] - gro2(d, n, y, z, x),
                   gro2(d, n, x, z, q));
      const Rat slack = scale * (lhs2 - rhs2) / 2 - delta;
      c.record(slack, pts(s, {x, y, z, q}));
    };
    if (opts.exhaustive && n <= 40) {
      for (PointId x = 0; x < s.size(); ++x)
        for (PointId y = 0; y < s.size(); ++y)
          for (PointId z = 0; z < s.size(); ++z)
            for (PointId q = 0; q < s.size(); ++q) probe(x, y, z, q);
    } else {
      for (std::uint64_t it = 0; it < opts.sample_count; ++it) {
        probe(sampler.point(), sampler.point(), sampler.point(),
              sampler.point());
      }
    }
    report.checks.push_back(std::move(c));
  }

  // --- projections on quasi-convex subsets ---
  {
    Check ci{"lemma_projection_gromov_product"};
    Check cii{"lemma_projection_distance"};
    const std::array<Rat, 3> etas = {Rat(0), delta, scale};
    for (std::uint64_t it = 0; it < opts.subset_samples; ++it) {
      PointSubset Y = sampler.subset(it);
      if (Y.empty()) continue;
      const Rat alpha = quasiconvexity_defect(s, Y);
      for (int rep = 0; rep < 8; ++rep) {
        const PointId x = sampler.point(), x2 = sampler.point();
        const Rat eta = etas[std::size_t(rep) % etas.size()];
        const Rat eta2 = etas[std::size_t(rep + 1) % etas.size()];
        const PointId p = project(s, x, Y, eta);
        const PointId p2 = project(s, x2, Y, eta2);
        for (PointId y : Y.members) {
          ci.record(gromov_product(s, x, y, p) - (alpha + eta),
                    pts(s, {x, y, p}));
        }
        const Rat eps = 2 * alpha + eta + eta2 + delta;
        const Rat bound = std::max(
            s.dist(x, x2) - s.dist(x, p) - s.dist(x2, p2) + 2 * eps, eps);
        cii.record(s.dist(p, p2) - bound, pts(s, {x, x2, p, p2}));
      }
    }
    report.checks.push_back(std::move(ci));
    report.checks.push_back(std::move(cii));
  }

  // --- neighborhoods of quasi-convex subsets ---
  {
    Check c{"lemma_neighborhood_quasiconvex"};
    for (std::uint64_t it = 0; it < opts.subset_samples; ++it) {
      PointSubset Y = sampler.subset(it);
      if (Y.empty()) continue;
      const Rat alpha = quasiconvexity_defect(s, Y);
      const Rat bumped = alpha + scale;
      for (const Rat& A : {alpha, bumped}) {
        PointSubset nb = neighborhood(s, Y, A);
        if (nb.size() > 150) continue;  // keep the defect scan tractable
        c.record(quasiconvexity_defect(s, nb) - 2 * delta,
                 "A=" + format_rational(A));
      }
    }
    report.checks.push_back(std::move(c));
  }

  // --- hull quasi-convexity ---
  // Mesh size stands in for the edge scale of the discretization: the taut
  // point set is a (1, 2*delta + 2*mesh)-quasi-geodesic hull. On a tree with
  // zero slack the taut set is the spanned subtree, so no allowance is needed.
  std::int64_t mesh_ticks = 0;
  for (std::size_t x = 0; x < n; ++x) {
    std::int64_t nearest = 0;
    for (std::size_t y = 0; y < n; ++y) {
      if (y == x) continue;
      const std::int64_t t = d[x * n + y];
      if (nearest == 0 || t < nearest) nearest = t;
    }
    mesh_ticks = std::max(mesh_ticks, nearest);
  }
  const bool sharp_hull = s.is_tree_metric() && opts.hull_slack == 0;
  const Rat hull_allowance =
      sharp_hull ? Rat(0)
                 : 2 * delta + 2 * scale * mesh_ticks + opts.hull_slack;
  {
    Check c{"lemma_hull_quasiconvex"};
    for (std::uint64_t it = 0; it < opts.subset_samples; ++it) {
      PointSubset Y = sampler.subset(it);
      if (Y.empty() || Y.size() > 24) continue;
      PointSubset H = hull(s, Y, opts.hull_slack);
      if (H.size() > 150) continue;
      c.record(quasiconvexity_defect(s, H) - (6 * delta + 2 * hull_allowance),
               "subset#" + std::to_string(it));
    }
    report.checks.push_back(std::move(c));
  }

  // --- Gromov products and hulls ---
  {
    Check c{"lemma_hull_gromov_product"};
    for (std::uint64_t it = 0; it < opts.subset_samples; ++it) {
      PointSubset Y = PointSubset::of(s, {sampler.point(), sampler.point()});
      PointSubset Z = PointSubset::of(s, {sampler.point(), sampler.point()});
      const PointId x = sampler.point();
      Rat alpha{0};
      for (PointId y : Y.members)
        for (PointId z : Z.members)
          alpha = std::max(alpha, gromov_product(s, y, z, x));
      PointSubset HY = hull(s, Y, opts.hull_slack);
      PointSubset HZ = hull(s, Z, opts.hull_slack);
      const Rat bound = alpha + 3 * delta + hull_allowance;
      for (PointId y : HY.members) {
        for (PointId z : HZ.members) {
          c.record(gromov_product(s, y, z, x) - bound, pts(s, {y, z, x}));
        }
      }
    }
    report.checks.push_back(std::move(c));
  }

  // --- stability of discrete chains ---
  {
    Check c{"prop_discrete_chain_stability"};
    std::uint64_t skipped = 0;

    auto run_chain = [&](const std::vector<PointId>& chain) {
      if (chain.size() < 3) return;
      Rat l = opts.chain_l;
      for (std::size_t i = 1; i + 1 < chain.size(); ++i) {
        l = std::max(l, gromov_product(s, chain[i - 1], chain[i + 1],
                                       chain[i]));
      }
      for (std::size_t i = 1; i + 2 < chain.size(); ++i) {
        if (s.dist(chain[i], chain[i + 1]) < opts.chain_gap) {
          ++skipped;  // hypothesis (ii) fails: chain not applicable
          return;
        }
      }
      const PointId first = chain.front(), last = chain.back();
      for (std::size_t i = 0; i < chain.size(); ++i) {
        c.record(gromov_product(s, first, last, chain[i]) - (l + 5 * delta),
                 "chain index " + std::to_string(i));
      }
      for (int rep = 0; rep < 8; ++rep) {
        const PointId p = sampler.point();
        Rat best = gromov_product(s, chain[1], chain[0], p);
        for (std::size_t i = 1; i + 1 < chain.size(); ++i) {
          best = std::min(best,
                          gromov_product(s, chain[i + 1], chain[i], p));
        }
        c.record(best - (gromov_product(s, first, last, p) + 2 * l +
                         8 * delta),
                 "projection point " + s.name(p));
      }
    };

    for (std::uint64_t it = 0; it < opts.subset_samples; ++it) {
      // points spread along a geodesic between two random points
      const PointId u = sampler.point(), v = sampler.point();
      if (u == v) continue;
      PointSubset geo = hull(s, PointSubset::of(s, {u, v}), Rat(0));
      std::vector<PointId> chain;
      const std::int64_t total = s.ticks(u, v);
      const int m = 4;
      for (int i = 0; i <= m; ++i) {
        const std::int64_t target = total * i / m;
        PointId best = u;
        std::int64_t err = total;
        for (PointId p : geo.members) {
          const std::int64_t e = std::abs(s.ticks(u, p) - target);
          if (e < err) {
            err = e;
            best = p;
          }
        }
        if (chain.empty() || chain.back() != best) chain.push_back(best);
      }
      run_chain(chain);
    }
    for (const auto& chain : opts.chains) run_chain(chain);

    if (c.checked == 0 && skipped > 0) {
      c.status = CheckStatus::not_applicable;
      c.witness = std::to_string(skipped) + " chain(s) skipped";
    } else if (skipped > 0 && c.witness.empty()) {
      c.witness = std::to_string(skipped) + " chain(s) skipped";
    }
    report.checks.push_back(std::move(c));
  }

  return report;
}

}  // namespace dehnfill
