#include "dehnfill/rotation.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "dehnfill/errors.hpp"
#include "dehnfill/metric_kernel.hpp"

namespace dehnfill {

namespace {

std::string syllable_key(const SyllableForm& s) {
  std::string out;
  for (const auto& syl : s.syllables) {
    out += "(" + std::to_string(syl.factor) + "^" + std::to_string(syl.exp) +
           ")";
  }
  return out.empty() ? "1" : out;
}

}  // namespace

const RotationPair* RotationFamily::pair_at(PointId apex) const {
  for (const auto& p : pairs) {
    if (p.apex == apex) return &p;
  }
  return nullptr;
}

nlohmann::json RotationFamily::to_json(const TruncatedTree& tree) const {
  const auto& pres = tree.presentation();
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : pairs) {
    arr.push_back({{"factor", p.factor},
                   {"conjugator", format_word(p.conjugator, pres)},
                   {"apex", p.apex}});
  }
  return {{"sigma", format_rational(sigma)},
          {"pairs", arr}};
}

GroupWord filling_generator(const FreeProductPresentation& pres,
                            const FillingSpec& filling, int factor) {
  filling.validate(pres);
  const std::int64_t k = filling.indices[static_cast<std::size_t>(factor)];
  SyllableForm s;
  s.syllables.push_back({factor, k});
  return from_syllables(s, pres);
}

std::vector<GroupWord> rotation_subgroup_sample(
    const FreeProductPresentation& pres, const FillingSpec& filling,
    const RotationPair& pair, std::int64_t power_bound) {
  const auto& f = pres.factor(pair.factor);
  const std::int64_t k =
      filling.indices[static_cast<std::size_t>(pair.factor)];
  std::vector<std::int64_t> powers;
  if (f.finite()) {
    for (std::int64_t j = 1; j < f.order / k; ++j) powers.push_back(j);
  } else {
    for (std::int64_t j = 1; j <= power_bound; ++j) {
      powers.push_back(j);
      powers.push_back(-j);
    }
  }
  std::vector<GroupWord> out;
  for (std::int64_t j : powers) {
    SyllableForm s;
    s.syllables.push_back({pair.factor, j * k});
    out.push_back(conjugate(pair.conjugator, from_syllables(s, pres), pres));
  }
  return out;
}

RotationFamily build_family(const TruncatedTree& tree,
                            const FillingSpec& filling, const Rat& sigma) {
  const auto& pres = tree.presentation();
  filling.validate(pres);
  if (sigma <= 0) throw input_error("sigma must be positive");
  for (int i = 0; i < pres.num_factors(); ++i) {
    const auto& f = pres.factor(i);
    const std::int64_t k = filling.indices[static_cast<std::size_t>(i)];
    if (f.finite() && k == f.order) {
      throw precondition_error(
          "filling index " + std::to_string(k) + " makes N_" +
          std::to_string(i) + " trivial; rotation groups must be nontrivial");
    }
  }
  RotationFamily fam;
  fam.sigma = sigma;
  fam.filling = filling;
  for (PointId v : tree.apex_vertices()) {
    const auto& vx = tree.vertex(v);
    fam.pairs.push_back({vx.factor, vx.rep, v});
  }
  return fam;
}

SuiteReport verify_axioms(const RotationFamily& family,
                          const TruncatedTree& tree,
                          const RotationSuiteOptions& opts) {
  const auto& pres = tree.presentation();
  const auto& metric = tree.subdivided_metric();
  SuiteReport report;

  if (tree.radius() < 3) {
    throw precondition_error(
        "ball interior margin too small for the axiom scan; radius >= 3 "
        "needed");
  }

  std::vector<const RotationPair*> by_apex(std::size_t(tree.size()), nullptr);
  for (const auto& p : family.pairs) {
    if (p.apex >= 0 && p.apex < tree.size()) {
      by_apex[std::size_t(p.apex)] = &p;
    }
  }

  {
    // R1 on B(v, r); sigma/10 is below the vertex mesh, so the radius is
    // widened to one full edge to keep the scan non-vacuous.
    Check c{"axiom_r1_rotation"};
    const Rat tenth = family.sigma / 10;
    const Rat one_edge = 2 * tree.edge_scale();
    const Rat r1 = std::max(tenth, one_edge);
    for (const auto& p : family.pairs) {
      if (tree.boundary_margin(p.apex) < 2) continue;
      const auto sample = rotation_subgroup_sample(pres, family.filling, p);
      for (PointId x = 0; x < tree.size(); ++x) {
        if (metric.dist(p.apex, x) > r1) continue;
        for (const auto& h : sample) {
          const auto hx = tree.act(h, x);
          if (!hx) continue;
          const Rat lhs = metric.dist(*hx, x);
          const Rat rhs = 2 * metric.dist(p.apex, x);
          const Rat slack = lhs > rhs ? lhs - rhs : rhs - lhs;
          c.record(slack, metric.name(x) + " under " + format_word(h, pres));
        }
      }
    }
    if (c.checked == 0) {
      throw precondition_error("no checkable apex neighborhood; enlarge the "
                               "ball radius");
    }
    report.checks.push_back(std::move(c));
  }

  {
    Check c{"axiom_r2_separation"};
    for (std::size_t i = 0; i < family.pairs.size(); ++i) {
      for (std::size_t j = i + 1; j < family.pairs.size(); ++j) {
        const PointId a = family.pairs[i].apex, b = family.pairs[j].apex;
        c.record(family.sigma - metric.dist(a, b),
                 metric.name(a) + " / " + metric.name(b));
      }
    }
    report.checks.push_back(std::move(c));
  }

  {
    Check c{"axiom_r3_invariance"};
    const auto gs = enumerate_ball(pres, opts.r3_word_length);
    std::mt19937_64 rng(opts.seed);
    for (const auto& p : family.pairs) {
      for (const auto& g : gs) {
        const auto moved = tree.act(g, p.apex);
        if (!moved) continue;
        const RotationPair* q = by_apex[std::size_t(*moved)];
        if (q == nullptr || q->factor != p.factor) {
          c.record_violation("translate of " + metric.name(p.apex) + " by " +
                             format_word(g, pres) + " missing from the family");
        } else {
          c.record(Rat(0), "");
        }
      }
    }
    report.checks.push_back(std::move(c));
  }

  return report;
}

SuiteReport verify_rotation_lemmas(const RotationFamily& family,
                                   const TruncatedTree& tree,
                                   const RotationSuiteOptions& opts) {
  const auto& pres = tree.presentation();
  const auto& metric = tree.subdivided_metric();
  SuiteReport report;
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<int> pick_v(0, tree.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_p(0,
                                                    family.pairs.size() - 1);

  {
    Check c{"lemma_rotation_gromov_product"};
    for (std::uint64_t it = 0; it < opts.lemma_samples; ++it) {
      const auto& p = family.pairs[pick_p(rng)];
      const auto sample = rotation_subgroup_sample(pres, family.filling, p);
      const PointId x = PointId(pick_v(rng));
      for (const auto& h : sample) {
        const auto hx = tree.act(h, x);
        if (!hx) continue;
        c.record(gromov_product(metric, x, *hx, p.apex) - 2 * opts.delta,
                 metric.name(x) + " at " + metric.name(p.apex));
      }
    }
    // the apex itself gives product zero
    const auto& p0 = family.pairs.front();
    c.record(gromov_product(metric, p0.apex, p0.apex, p0.apex) -
                 2 * opts.delta,
             "x = v");
    report.checks.push_back(std::move(c));
  }

  {
    Check c{"lemma_rotation_far_quasiconvex"};
    // quasi-convex probes: loxodromic axes and small balls
    std::vector<PointSubset> probes;
    for (const auto& g : enumerate_ball(pres, 2)) {
      if (cyclic_reduction(g, pres).core.syllables.size() < 2) continue;
      try {
        probes.push_back(
            axis_and_cylinder(tree, g, metric, opts.delta).cylinder);
      } catch (const precondition_error&) {
      }
      if (probes.size() >= 3) break;
    }
    for (int b = 0; b < 3; ++b) {
      const PointId c0 = PointId(pick_v(rng));
      std::vector<PointId> m;
      for (PointId x = 0; x < tree.size(); ++x) {
        if (metric.dist(c0, x) <= 2 * tree.edge_scale()) m.push_back(x);
      }
      probes.push_back(PointSubset::of(metric, std::move(m)));
    }
    for (const auto& Y : probes) {
      if (Y.empty() || Y.size() > 100) continue;
      const Rat alpha = quasiconvexity_defect(metric, Y);
      for (const auto& p : family.pairs) {
        if (dist_to_subset(metric, p.apex, Y) <= alpha + 3 * opts.delta) {
          continue;
        }
        const auto sample =
            rotation_subgroup_sample(pres, family.filling, p, 1);
        for (const auto& h : sample) {
          for (PointId y : Y.members) {
            for (PointId y2 : Y.members) {
              const auto hy2 = tree.act(h, y2);
              if (!hy2) continue;
              c.record(gromov_product(metric, y, *hy2, p.apex) -
                           3 * opts.delta,
                       metric.name(y) + "," + metric.name(y2) + " at " +
                           metric.name(p.apex));
            }
          }
        }
      }
    }
    report.checks.push_back(std::move(c));
  }

  return report;
}

std::vector<GroupWord> kernel_generators(const RotationFamily& family,
                                         const TruncatedTree& tree) {
  const auto& pres = tree.presentation();
  std::vector<GroupWord> out;
  for (const auto& p : family.pairs) {
    out.push_back(conjugate(p.conjugator,
                            filling_generator(pres, family.filling, p.factor),
                            pres));
  }
  std::sort(out.begin(), out.end(),
            [&](const GroupWord& a, const GroupWord& b) {
              return shortlex_less(a, b, pres);
            });
  return out;
}

SuiteReport verify_proper_action(const TruncatedTree& tree,
                                 const FillingSpec& filling,
                                 std::int64_t max_len) {
  const auto& pres = tree.presentation();
  SuiteReport report;
  Check c{"proper_action_off_apices"};
  for (const auto& k : enumerate_ball(pres, max_len)) {
    if (k.is_identity() || !kernel_membership(k, pres, filling)) continue;
    for (PointId v = 0; v < tree.size(); ++v) {
      const auto img = tree.act(k, v);
      if (!img || *img != v) continue;
      if (tree.vertex(v).kind != VertexKind::apex) {
        c.record_violation(format_word(k, pres) + " fixes non-apex " +
                           tree.base_metric().name(v));
      } else {
        c.record(Rat(0), "");
      }
    }
  }
  report.checks.push_back(std::move(c));
  return report;
}

FiniteMetricSpace build_quotient_space(const TruncatedTree& tree,
                                       const FillingSpec& filling) {
  const auto& pres = tree.presentation();
  filling.validate(pres);

  std::map<std::string, int> index;
  std::vector<std::string> names;
  auto node = [&](const std::string& key) {
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    const int id = static_cast<int>(names.size());
    index[key] = id;
    names.push_back(key);
    return id;
  };

  auto vertex_key = [&](PointId v) {
    const auto& vx = tree.vertex(v);
    SyllableForm img = quotient_image(vx.rep, pres, filling);
    if (vx.kind == VertexKind::element) {
      return "E:" + syllable_key(img);
    }
    if (!img.syllables.empty() && img.syllables.back().factor == vx.factor) {
      img.syllables.pop_back();
    }
    return "A" + std::to_string(vx.factor) + ":" + syllable_key(img);
  };

  std::set<std::pair<int, int>> edge_set;
  std::vector<int> image(std::size_t(tree.size()));
  for (PointId v = 0; v < tree.size(); ++v) {
    image[std::size_t(v)] = node(vertex_key(v));
  }
  for (const auto& [u, v] : tree.base_metric().graph_edges()) {
    int a = image[std::size_t(u)], b = image[std::size_t(v)];
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    edge_set.insert({a, b});
  }

  std::vector<std::tuple<int, int, Rat>> edges;
  for (const auto& [a, b] : edge_set) {
    edges.emplace_back(a, b, tree.edge_scale());
  }
  return FiniteMetricSpace::from_graph(std::move(names), std::move(edges));
}

}  // namespace dehnfill
