#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "dehnfill/errors.hpp"
#include "dehnfill/metric_kernel.hpp"
#include "dehnfill/metric_space.hpp"

using namespace dehnfill;

namespace {

FiniteMetricSpace cycle(int n, const Rat& w = Rat(1)) {
  std::vector<std::string> names;
  std::vector<std::tuple<int, int, Rat>> edges;
  for (int i = 0; i < n; ++i) {
    names.push_back("c" + std::to_string(i));
    edges.emplace_back(i, (i + 1) % n, w);
  }
  return FiniteMetricSpace::from_graph(std::move(names), std::move(edges));
}

FiniteMetricSpace path_graph(int n, const Rat& w = Rat(1)) {
  std::vector<std::string> names;
  std::vector<std::tuple<int, int, Rat>> edges;
  for (int i = 0; i < n; ++i) {
    names.push_back("p" + std::to_string(i));
    if (i > 0) edges.emplace_back(i - 1, i, w);
  }
  return FiniteMetricSpace::from_graph(std::move(names), std::move(edges));
}

FiniteMetricSpace random_tree(int n, std::uint64_t seed,
                              bool rational_weights = false) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> names;
  std::vector<std::tuple<int, int, Rat>> edges;
  for (int i = 0; i < n; ++i) {
    names.push_back("t" + std::to_string(i));
    if (i > 0) {
      const int parent = int(rng() % std::uint64_t(i));
      Rat w = rational_weights ? rat(1 + int(rng() % 5), 1 + int(rng() % 3))
                               : Rat(1 + int(rng() % 4));
      edges.emplace_back(parent, i, w);
    }
  }
  return FiniteMetricSpace::from_graph(std::move(names), std::move(edges));
}

// Independent oracle: four-point constant straight from the definition,
// pure rational arithmetic, no tick machinery.
Rat naive_delta(const FiniteMetricSpace& s) {
  Rat best{0};
  const int n = s.size();
  for (PointId x = 0; x < n; ++x)
    for (PointId y = 0; y < n; ++y)
      for (PointId z = 0; z < n; ++z)
        for (PointId t = 0; t < n; ++t) {
          const Rat def =
              std::min(gromov_product(s, x, y, t), gromov_product(s, y, z, t)) -
              gromov_product(s, x, z, t);
          if (def > best) best = def;
        }
  return best;
}

}  // namespace

TEST_CASE("rational parsing round trip") {
  CHECK(parse_rational("7") == Rat(7));
  CHECK(parse_rational("-3/6") == rat(-1, 2));
  CHECK(format_rational(rat(10, 4)) == "5/2");
  CHECK(format_rational(rat(-8, 2)) == "-4");
  CHECK_THROWS_AS(parse_rational(""), input_error);
  CHECK_THROWS_AS(parse_rational("x"), input_error);
  CHECK_THROWS_AS(parse_rational("1/0"), input_error);
}

TEST_CASE("matrix constructor validates the metric axioms") {
  auto bad_sym = std::vector<std::vector<Rat>>{{Rat(0), Rat(1)},
                                               {Rat(2), Rat(0)}};
  CHECK_THROWS_AS(FiniteMetricSpace::from_matrix({"a", "b"}, bad_sym),
                  input_error);
  auto bad_tri = std::vector<std::vector<Rat>>{
      {Rat(0), Rat(1), Rat(5)}, {Rat(1), Rat(0), Rat(1)}, {Rat(5), Rat(1), Rat(0)}};
  CHECK_THROWS_AS(FiniteMetricSpace::from_matrix({"a", "b", "c"}, bad_tri),
                  input_error);
  auto good = std::vector<std::vector<Rat>>{
      {Rat(0), rat(1, 2)}, {rat(1, 2), Rat(0)}};
  auto s = FiniteMetricSpace::from_matrix({"a", "b"}, good);
  CHECK(s.dist(0, 1) == rat(1, 2));
  CHECK(s.index_of("b") == 1);
  CHECK_THROWS_AS(s.index_of("zz"), input_error);
}

TEST_CASE("graph constructor computes shortest paths") {
  // square with one diagonal shortcut
  auto s = FiniteMetricSpace::from_graph(
      {"a", "b", "c", "d"},
      {{0, 1, Rat(1)}, {1, 2, Rat(1)}, {2, 3, Rat(1)}, {3, 0, Rat(1)},
       {0, 2, rat(1, 2)}});
  CHECK(s.dist(0, 2) == rat(1, 2));
  CHECK(s.dist(1, 3) == Rat(2));
  CHECK(s.dist(1, 0) + s.dist(0, 2) == rat(3, 2));
  CHECK_THROWS_AS(FiniteMetricSpace::from_graph({"a", "b"}, {}), input_error);
  CHECK_THROWS_AS(
      FiniteMetricSpace::from_graph({"a"}, {{0, 0, Rat(1)}}), input_error);
}

TEST_CASE("gromov products on a path graph") {
  auto s = path_graph(6);
  // <p0,p5>_p2 = (2 + 3 - 5)/2 = 0 on a geodesic
  CHECK(gromov_product(s, 0, 5, 2) == Rat(0));
  // <p0,p0>_p4 = d(p0,p4)
  CHECK(gromov_product(s, 0, 0, 4) == Rat(4));
  CHECK(gromov_product(s, 1, 4, 3) == gromov_product(s, 4, 1, 3));
}

TEST_CASE("exact hyperbolicity constants of cycles") {
  // frozen after cross-checking against the naive definition below
  const std::vector<std::pair<int, Rat>> expect = {
      {5, rat(1, 2)}, {6, Rat(1)}, {7, Rat(1)}, {8, Rat(2)}, {10, Rat(2)}};
  for (const auto& [n, want] : expect) {
    auto s = cycle(n);
    auto r = hyperbolicity_delta(s);
    CHECK(r.exact);
    CHECK(r.delta == want);
    CHECK(r.dual_delta == want);
    CHECK(naive_delta(s) == want);
  }
}

TEST_CASE("cycle with rational edge weight scales the constant") {
  auto r = hyperbolicity_delta(cycle(8, rat(1, 3)));
  CHECK(r.delta == rat(2, 3));
  CHECK(r.dual_delta == rat(2, 3));
}

TEST_CASE("minimal constants from both formulations agree") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    // random connected graphs, not trees
    std::mt19937_64 rng(seed);
    const int n = 8 + int(seed);
    std::vector<std::string> names;
    std::vector<std::tuple<int, int, Rat>> edges;
    for (int i = 0; i < n; ++i) {
      names.push_back("v" + std::to_string(i));
      if (i > 0) edges.emplace_back(int(rng() % std::uint64_t(i)), i,
                                    Rat(1 + int(rng() % 3)));
    }
    for (int extra = 0; extra < n / 2; ++extra) {
      const int a = int(rng() % std::uint64_t(n));
      const int b = int(rng() % std::uint64_t(n));
      if (a != b) edges.emplace_back(a, b, rat(1 + int(rng() % 4), 2));
    }
    auto s = FiniteMetricSpace::from_graph(std::move(names), std::move(edges));
    auto r = hyperbolicity_delta(s);
    CHECK(r.delta == r.dual_delta);
    CHECK(r.delta == naive_delta(s));
  }
}

TEST_CASE("trees are 0-hyperbolic") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto s = random_tree(30 + int(seed) * 10, seed, seed % 2 == 1);
    CHECK(s.is_tree_metric());
    auto r = hyperbolicity_delta(s);
    CHECK(r.delta == Rat(0));
    CHECK(r.dual_delta == Rat(0));
  }
  auto big = random_tree(200, 99);
  auto r = hyperbolicity_delta(big);
  CHECK(r.exact);
  CHECK(r.delta == Rat(0));
}

TEST_CASE("sampled delta is a lower bound and reproducible") {
  auto s = cycle(10);
  DeltaOptions o;
  o.exact = false;
  o.sample_count = 500;
  o.seed = 42;
  auto a = hyperbolicity_delta(s, o);
  auto b = hyperbolicity_delta(s, o);
  CHECK_FALSE(a.exact);
  CHECK(a.delta == b.delta);
  CHECK(a.delta <= Rat(2));
  CHECK(a.delta == a.dual_delta);
}

TEST_CASE("subset distance, projection, neighborhood") {
  auto s = path_graph(7);
  auto Y = PointSubset::of(s, {2, 3});
  CHECK(dist_to_subset(s, 6, Y) == Rat(3));
  CHECK(dist_to_subset(s, 2, Y) == Rat(0));
  CHECK_THROWS_AS(dist_to_subset(s, 0, PointSubset::of(s, {})), input_error);

  CHECK(project(s, 6, Y, Rat(0)) == 3);
  CHECK(project(s, 0, Y, Rat(0)) == 2);
  // with a large tolerance the smallest id wins
  CHECK(project(s, 6, Y, Rat(10)) == 2);
  CHECK(project(s, 6, Y, Rat(10)) == project(s, 6, Y, Rat(10)));
  CHECK_THROWS_AS(project(s, 0, PointSubset::of(s, {}), Rat(0)), input_error);

  auto nb = neighborhood(s, Y, Rat(1));
  CHECK(nb.members == std::vector<PointId>{1, 2, 3, 4});
  CHECK_THROWS_AS(neighborhood(s, Y, Rat(-1)), input_error);
}

TEST_CASE("quasiconvexity defect and hull on trees") {
  auto s = random_tree(40, 7);
  // a connected subtree spanned as a hull is convex: defect 0
  auto H = hull(s, PointSubset::of(s, {0, 17, 33}), Rat(0));
  CHECK(quasiconvexity_defect(s, H) == Rat(0));
  // the hull of two points is the geodesic between them
  auto G = hull(s, PointSubset::of(s, {3, 29}), Rat(0));
  for (PointId p : G.members) {
    CHECK(s.dist(3, p) + s.dist(p, 29) == s.dist(3, 29));
  }
  // scattered leaves generally have positive defect
  auto s2 = path_graph(5);
  CHECK(quasiconvexity_defect(s2, PointSubset::of(s2, {0, 4})) == Rat(2));
}

TEST_CASE("local quasi-geodesic check") {
  auto s = path_graph(8);
  auto geo = DiscretePath::through(s, {0, 2, 4, 6, 7});
  CHECK(check_local_quasigeodesic(geo, Rat(100), Rat(1), Rat(0)).ok);

  auto back = DiscretePath::through(s, {0, 1, 2, 1});
  auto r = check_local_quasigeodesic(back, Rat(3), Rat(1), Rat(0));
  CHECK_FALSE(r.ok);
  CHECK(r.side == "upper");
  CHECK(r.i == 0);
  CHECK(r.j == 3);
  // the same backtrack is invisible beyond the locality window
  CHECK(check_local_quasigeodesic(back, Rat(1), Rat(1), Rat(0)).ok);

  CHECK_THROWS_AS(
      check_local_quasigeodesic(geo, Rat(1), rat(1, 2), Rat(0)), input_error);
}

TEST_CASE("lemma suite on a tree passes with zero slack") {
  auto s = random_tree(35, 3);
  SuiteOptions o;
  o.delta = Rat(0);
  o.exhaustive = true;
  o.sample_count = 4000;
  o.subset_samples = 10;
  auto rep = verify_metric_lemma_suite(s, o);
  CHECK(rep.all_passed());
  for (const auto& c : rep.checks) {
    INFO(c.name, " slack ", format_rational(c.worst_slack));
    if (c.status == CheckStatus::pass && c.checked > 0) {
      CHECK(c.worst_slack <= Rat(0));
    }
  }
}

TEST_CASE("lemma suite on the 8-cycle at the exact constant") {
  auto s = cycle(8);
  SuiteOptions o;
  o.delta = Rat(2);
  o.exhaustive = true;
  o.subset_samples = 10;
  auto rep = verify_metric_lemma_suite(s, o);
  for (const auto& c : rep.checks) {
    INFO(c.name, " slack ", format_rational(c.worst_slack), " witness ",
         c.witness);
    CHECK(c.status != CheckStatus::fail);
  }
  CHECK(rep.all_passed());
}

TEST_CASE("lemma suite rejects a delta below the true constant") {
  SuiteOptions o;
  o.delta = Rat(1);
  o.exhaustive = true;
  CHECK_THROWS_AS(verify_metric_lemma_suite(cycle(8), o), precondition_error);
}

TEST_CASE("chain violating the gap hypothesis is not applicable") {
  auto s = path_graph(9);
  SuiteOptions o;
  o.delta = Rat(0);
  o.subset_samples = 0;  // no auto-generated chains
  o.chain_gap = Rat(5);
  o.chains = {{0, 1, 2, 3}};  // internal gaps are 1 < 5
  auto rep = verify_metric_lemma_suite(s, o);
  const Check* c = rep.find("prop_discrete_chain_stability");
  REQUIRE(c != nullptr);
  CHECK(c->status == CheckStatus::not_applicable);
}
