#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "dehnfill/errors.hpp"
#include "dehnfill/metric_kernel.hpp"
#include "dehnfill/tree.hpp"

using namespace dehnfill;

namespace {

FreeProductPresentation zz() {
  return FreeProductPresentation({{0, "a"}, {0, "b"}});
}

FreeProductPresentation z2_z3() {
  return FreeProductPresentation({{2, "a"}, {3, "b"}});
}

const Rat kDelta = Rat(1, BigInt("100000000000"));  // 1e-11

}  // namespace

TEST_CASE("tree build basics") {
  auto p = zz();
  auto t = TruncatedTree::build(p, 3, Rat(1));
  CHECK(t.size() > 0);
  CHECK(t.base_metric().is_tree_metric());
  CHECK(t.subdivided_metric().is_tree_metric());
  // the two metrics differ by the factor two
  CHECK(t.subdivided_metric().dist(0, 1) == 2 * t.base_metric().dist(0, 1));

  // base apices of the two factors are adjacent through the identity:
  // distance 1 in the base metric, 2 in the subdivided one
  const PointId va = t.base_apex(0), vb = t.base_apex(1);
  CHECK(t.base_metric().dist(va, vb) == Rat(1));
  CHECK(t.subdivided_metric().dist(va, vb) == Rat(2));

  CHECK_THROWS_AS(TruncatedTree::build(p, 1, Rat(1)), precondition_error);
  CHECK_THROWS_AS(TruncatedTree::build(p, 5, Rat(1), 10), resource_error);
}

TEST_CASE("single factor tree is a point") {
  auto p = FreeProductPresentation({{0, "a"}});
  auto t = TruncatedTree::build(p, 3, Rat(1));
  CHECK(t.size() == 1);
  CHECK(t.base_metric().graph_edges().empty());
}

TEST_CASE("biregular ball for Z/2 * Z/3") {
  auto p = z2_z3();
  auto t = TruncatedTree::build(p, 3, Rat(1));
  // apex valence equals the factor order wherever the link is complete
  int checked = 0;
  for (PointId v : t.apex_vertices()) {
    if (t.boundary_margin(v) < 2) continue;
    int deg = 0;
    for (const auto& [x, y] : t.base_metric().graph_edges()) {
      if (x == v || y == v) ++deg;
    }
    CHECK(deg == t.presentation().factor(t.vertex(v).factor).order);
    ++checked;
  }
  CHECK(checked > 0);
  // element vertices always touch one apex per factor
  const PointId idv = t.identity_vertex();
  int deg = 0;
  for (const auto& [x, y] : t.base_metric().graph_edges()) {
    if (x == idv || y == idv) ++deg;
  }
  CHECK(deg == 2);
}

TEST_CASE("group action on vertices") {
  auto p = zz();
  auto t = TruncatedTree::build(p, 4, Rat(1));
  const auto a = parse_word("a", p);
  const PointId va = t.base_apex(0), vb = t.base_apex(1);

  CHECK(t.act(GroupWord{}, vb) == vb);       // identity acts as identity
  CHECK(t.act(a, va) == va);                 // stabilizer
  const auto moved = t.act(a, vb);           // a . <b> = a<b>
  REQUIRE(moved.has_value());
  CHECK(*moved == *t.find_apex(1, a));
  CHECK(*moved != vb);

  // deep translate leaves the ball as a typed marker
  const auto far = t.act(parse_word("a^4 b^4", p), t.identity_vertex());
  CHECK_FALSE(far.has_value());
}

TEST_CASE("translation lengths") {
  auto p = zz();
  auto t = TruncatedTree::build(p, 5, Rat(1));
  CHECK(translation_length(t, parse_word("a", p)) == Rat(0));
  CHECK(translation_length(t, parse_word("a b a^-1", p)) == Rat(0));
  CHECK(translation_length(t, parse_word("a b", p)) == Rat(2));
  CHECK(translation_length(t, parse_word("a^2 b", p)) == Rat(2));
  CHECK(translation_length(t, parse_word("a b a b^-1", p)) == Rat(4));

  CHECK(stable_translation_length(t, parse_word("a b", p), 4) == Rat(2));
  CHECK(stable_translation_length(t, parse_word("a", p), 4) == Rat(0));
  CHECK(stable_translation_length(t, parse_word("a^2 b", p), 4) == Rat(2));

  CHECK(classify(t, parse_word("a", p)) == IsometryType::elliptic);
  CHECK(classify(t, parse_word("b a^3 b^-1", p)) == IsometryType::elliptic);
  CHECK(classify(t, parse_word("a b", p)) == IsometryType::loxodromic);

  // fractional edge scale propagates
  auto t2 = TruncatedTree::build(p, 4, rat(1, 2));
  CHECK(translation_length(t2, parse_word("a b", p)) == Rat(1));

  // word too long for the ball
  CHECK_THROWS_AS(translation_length(t, parse_word("a^3 b^3 a^2 b^2", p)),
                  precondition_error);
}

TEST_CASE("axis and cylinder") {
  auto p = zz();
  auto t = TruncatedTree::build(p, 5, Rat(1));
  const auto g = parse_word("a b", p);
  auto ax = axis_and_cylinder(t, g, t.base_metric(), kDelta);
  CHECK(ax.period == 2);
  CHECK(ax.path.size() >= 4);
  // geodesic: consecutive distances add up
  for (std::size_t i = 1; i < ax.path.size(); ++i) {
    CHECK(t.base_metric().dist(ax.path.front(), ax.path[i]) ==
          t.base_metric().dist(ax.path.front(), ax.path[i - 1]) +
              t.base_metric().dist(ax.path[i - 1], ax.path[i]));
  }
  // the axis of ab passes through both base apices
  const PointSubset axis_set = PointSubset::of(t.base_metric(), ax.path);
  CHECK(axis_set.contains(t.base_apex(0)));
  CHECK(axis_set.contains(t.base_apex(1)));
  // with tiny delta the cylinder equals the axis
  CHECK(ax.cylinder.members == axis_set.members);
  // g and g^-1 share the axis point set
  auto ax_inv = axis_and_cylinder(t, inverse_word(g), t.base_metric(), kDelta);
  auto sorted_fwd = ax.path, sorted_bwd = ax_inv.path;
  std::sort(sorted_fwd.begin(), sorted_fwd.end());
  std::sort(sorted_bwd.begin(), sorted_bwd.end());
  CHECK(sorted_fwd == sorted_bwd);
  // direction markers are the two ends
  CHECK(ax.forward_end != ax.backward_end);

  CHECK_THROWS_AS(axis_and_cylinder(t, parse_word("a", p), t.base_metric(),
                                    kDelta),
                  precondition_error);

  // an artificially large delta widens the cylinder beyond the axis
  auto wide = axis_and_cylinder(t, g, t.base_metric(), rat(1, 10));
  CHECK(wide.cylinder.size() > axis_set.size());
}

TEST_CASE("translation lemma suite on both metrics") {
  auto p = zz();
  auto t = TruncatedTree::build(p, 5, Rat(1));
  TranslationSuiteOptions o;
  o.delta = kDelta;
  o.max_word_length = 2;
  for (const FiniteMetricSpace* m :
       {&t.base_metric(), &t.subdivided_metric()}) {
    auto rep = verify_translation_lemmas(t, *m, o);
    for (const auto& c : rep.checks) {
      INFO(c.name, " slack ", format_rational(c.worst_slack), " witness ",
           c.witness);
      CHECK(c.status != CheckStatus::fail);
    }
    CHECK(rep.all_passed());
    const Check* sharp = rep.find("lemma_cylinder_sharp_identity");
    REQUIRE(sharp != nullptr);
    CHECK(sharp->checked > 0);
  }
}

TEST_CASE("exports") {
  auto p = z2_z3();
  auto t = TruncatedTree::build(p, 2, Rat(1));
  auto j = t.to_json();
  CHECK(j.at("vertices").size() == std::size_t(t.size()));
  CHECK(j.at("radius") == 2);
  auto dot = t.to_dot({t.base_apex(0)});
  CHECK(dot.find("graph tree") != std::string::npos);
  CHECK(dot.find("doublecircle") != std::string::npos);
  CHECK(dot.find("color=red") != std::string::npos);
}

TEST_CASE("tree metric is zero hyperbolic and suite passes") {
  auto p = zz();
  auto t = TruncatedTree::build(p, 4, Rat(1));
  auto r = hyperbolicity_delta(t.subdivided_metric(),
                               {false, 4000, 1});
  CHECK(r.delta == Rat(0));
  SuiteOptions o;
  o.delta = kDelta;
  o.sample_count = 3000;
  o.subset_samples = 6;
  auto rep = verify_metric_lemma_suite(t.subdivided_metric(), o);
  CHECK(rep.all_passed());
}
