#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>
#include <random>

#include "dehnfill/errors.hpp"
#include "dehnfill/oracle.hpp"

using namespace dehnfill;

namespace {

FreeProductPresentation zz() {
  return FreeProductPresentation({{0, "a"}, {0, "b"}});
}

const Rat kDelta = Rat(1, BigInt("100000000000"));  // 1e-11

FreeFactorLedger kernel_ledger(const FreeProductPresentation& pres,
                               std::int64_t radius) {
  auto tree = TruncatedTree::build(pres, radius, Rat(1));
  auto family = build_family(tree, FillingSpec{{3, 3}}, Rat(2));
  WindmillOptions opts;
  opts.delta = kDelta;
  return kernel_structure(tree, family, opts).ledger;
}

}  // namespace

TEST_CASE("normalize merges and cancels") {
  auto p = zz();
  FreeFactorLedger ledger;
  ledger.factors.push_back({0, GroupWord{}, 1, -1});
  ledger.factors.push_back({1, GroupWord{}, 1, -1});
  auto prod = FormalFreeProduct::from_ledger(ledger, p, FillingSpec{{3, 3}});

  CHECK(normalize({{0, 1}, {0, 2}}, prod) == FormalWord{{{0, 3}}});
  CHECK(normalize({{0, 1}, {0, -1}}, prod).is_identity());
  CHECK(normalize({{0, 1}, {1, 2}, {1, -2}, {0, 1}}, prod) ==
        FormalWord{{{0, 2}}});
  CHECK_THROWS_AS(normalize({{5, 1}}, prod), input_error);
}

TEST_CASE("finite slots wrap exponents") {
  auto p = FreeProductPresentation({{6, "a"}, {0, "b"}});
  FreeFactorLedger ledger;
  ledger.factors.push_back({0, GroupWord{}, 1, -1});  // <a^3> in Z/6, order 2
  ledger.factors.push_back({1, GroupWord{}, 1, -1});
  auto prod = FormalFreeProduct::from_ledger(ledger, p, FillingSpec{{3, 2}});
  CHECK(prod.slot(0).order == 2);
  CHECK(normalize({{0, 1}, {0, 1}}, prod).is_identity());
  CHECK(normalize({{0, 3}}, prod) == FormalWord{{{0, 1}}});
}

TEST_CASE("evaluate substitutes and reduces") {
  auto p = zz();
  FreeFactorLedger ledger;
  ledger.base = parse_word("a b", p);
  ledger.factors.push_back({0, GroupWord{}, 1, -1});
  auto prod = FormalFreeProduct::from_ledger(ledger, p, FillingSpec{{3, 3}});
  REQUIRE(prod.base_slot() == 0);

  CHECK(format_word(evaluate(FormalWord{{{1, 2}}}, prod, p), p) == "a^6");
  CHECK(evaluate(FormalWord{}, prod, p).is_identity());
  CHECK(format_word(evaluate(FormalWord{{{0, 1}, {1, 1}}}, prod, p), p) ==
        "a b a^3");
}

TEST_CASE("evaluate is a homomorphism on samples") {
  auto p = zz();
  auto ledger = kernel_ledger(p, 3);
  auto prod = FormalFreeProduct::from_ledger(ledger, p, FillingSpec{{3, 3}});
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> slot(0, prod.num_slots() - 1);
  std::uniform_int_distribution<int> exp(-3, 3);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<FormalSyllable> u, v;
    for (int i = 0; i < 3; ++i) {
      if (int e = exp(rng); e != 0) u.push_back({slot(rng), e});
      if (int e = exp(rng); e != 0) v.push_back({slot(rng), e});
    }
    auto uv = u;
    uv.insert(uv.end(), v.begin(), v.end());
    const auto lhs = evaluate(normalize(uv, prod), prod, p);
    const auto rhs = mul(evaluate(normalize(u, prod), prod, p),
                         evaluate(normalize(v, prod), prod, p), p);
    CHECK(lhs == rhs);
  }
}

TEST_CASE("kernel ledger certifies injective") {
  auto p = zz();
  auto ledger = kernel_ledger(p, 3);
  CHECK(ledger.factors.size() >= 4);
  auto prod = FormalFreeProduct::from_ledger(ledger, p, FillingSpec{{3, 3}});
  auto res = certify_injectivity(prod, p, 3, 3);
  CHECK(res.injective);
  CHECK(res.words_checked > 0);
  CHECK_FALSE(res.counterexample.has_value());
  auto j = res.to_json();
  CHECK(j.at("status") == "certified");
  CHECK(j.at("bounds").at("max_syllables") == 3);
}

TEST_CASE("early stage ledger certifies at four syllables") {
  auto p = zz();
  auto tree = TruncatedTree::build(p, 4, Rat(1));
  auto family = build_family(tree, FillingSpec{{3, 3}}, Rat(2));
  WindmillOptions opts;
  opts.delta = kDelta;
  auto Y = PointSubset::of(tree.subdivided_metric(), {tree.base_apex(0)});
  auto st = grow(grow(init_windmill(tree, family, Y, {}, opts), tree, family,
                      opts),
                 tree, family, opts);
  REQUIRE(st.ledger.factors.size() == 4);

  auto prod = FormalFreeProduct::from_ledger(st.ledger, p, FillingSpec{{3, 3}});
  auto res = certify_injectivity(prod, p, 4, 3);
  CHECK(res.injective);
  CHECK(res.words_checked == 24 + 24 * 18 + 24 * 18 * 18 + 24 * 18 * 18 * 18);
}

TEST_CASE("duplicate slot yields a counterexample") {
  auto p = zz();
  FreeFactorLedger ledger;
  ledger.factors.push_back({0, GroupWord{}, 1, -1});
  ledger.factors.push_back({0, GroupWord{}, 1, -1});  // corrupted duplicate
  auto prod = FormalFreeProduct::from_ledger(ledger, p, FillingSpec{{3, 3}});
  auto res = certify_injectivity(prod, p, 2, 3);
  CHECK_FALSE(res.injective);
  REQUIRE(res.counterexample.has_value());
  CHECK(evaluate(*res.counterexample, prod, p).is_identity());
  CHECK(res.to_json().at("status") == "counterexample");
}

TEST_CASE("base-only product certifies") {
  auto p = zz();
  FreeFactorLedger ledger;
  ledger.base = parse_word("a b", p);
  auto prod = FormalFreeProduct::from_ledger(ledger, p, FillingSpec{{3, 3}});
  auto res = certify_injectivity(prod, p, 1, 8);
  CHECK(res.injective);
  CHECK(res.words_checked == 16);  // powers 1..8 and their inverses
}

TEST_CASE("caps are enforced") {
  auto p = zz();
  FreeFactorLedger ledger;
  ledger.base = parse_word("a b", p);
  auto prod = FormalFreeProduct::from_ledger(ledger, p, FillingSpec{{3, 3}});
  CHECK_THROWS_AS(certify_injectivity(prod, p, 7, 3), resource_error);
  CHECK_THROWS_AS(certify_injectivity(prod, p, 3, 9), resource_error);
  CHECK_THROWS_AS(certify_injectivity(prod, p, 0, 3), resource_error);
}

TEST_CASE("rotation numbers match the formal syllable count") {
  auto p = zz();
  auto tree = TruncatedTree::build(p, 4, Rat(1));
  auto family = build_family(tree, FillingSpec{{3, 3}}, Rat(2));
  WindmillOptions opts;
  opts.delta = kDelta;
  auto run = kernel_structure(tree, family, opts);
  auto prod =
      FormalFreeProduct::from_ledger(run.ledger, p, FillingSpec{{3, 3}});

  const std::vector<FormalWord> words = {
      FormalWord{{{0, 1}}},
      FormalWord{{{0, 1}, {1, 1}}},
      FormalWord{{{0, 2}, {1, -1}, {0, 1}}},
  };
  for (const auto& w : words) {
    const auto g = evaluate(w, prod, p);
    auto dec = decompose(g, run.state, tree, family, opts);
    std::int64_t rotations = 0;
    for (const auto& s : w.syllables) {
      if (prod.slot(s.slot).kind == FormalSlot::Kind::rotation) ++rotations;
    }
    CHECK(dec.m == rotations);
  }
}
