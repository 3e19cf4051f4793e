#include "dehnfill/oracle.hpp"

#include <algorithm>
#include <string>

#include <nlohmann/json.hpp>

#include "dehnfill/errors.hpp"
#include "dehnfill/rotation.hpp"

namespace dehnfill {

namespace {

GroupWord power_word(const GroupWord& g, std::int64_t n,
                     const FreeProductPresentation& pres) {
  GroupWord out;
  const GroupWord base = n < 0 ? inverse_word(g) : g;
  for (std::int64_t i = 0; i < (n < 0 ? -n : n); ++i) out = mul(out, base, pres);
  return out;
}

std::int64_t wrap(std::int64_t exp, std::int64_t order) {
  if (order <= 0) return exp;
  exp %= order;
  if (exp < 0) exp += order;
  return exp;
}

}  // namespace

FormalFreeProduct FormalFreeProduct::from_ledger(
    const FreeFactorLedger& ledger, const FreeProductPresentation& pres,
    const FillingSpec& filling) {
  FormalFreeProduct out;
  if (ledger.base) {
    FormalSlot b;
    b.kind = FormalSlot::Kind::base;
    b.eval = *ledger.base;
    b.order = 0;
    out.add_slot(std::move(b));
  }
  for (const auto& f : ledger.factors) {
    FormalSlot s;
    s.kind = FormalSlot::Kind::rotation;
    s.factor = f.factor;
    s.conjugator = f.conjugator;
    s.eval = conjugate(f.conjugator,
                       filling_generator(pres, filling, f.factor), pres);
    const auto& fac = pres.factor(f.factor);
    s.order = fac.finite()
                  ? fac.order / filling.indices[std::size_t(f.factor)]
                  : 0;
    out.add_slot(std::move(s));
  }
  return out;
}

void FormalFreeProduct::add_slot(FormalSlot slot) {
  if (slot.eval.is_identity()) {
    throw input_error("formal slot evaluates to the identity");
  }
  slots_.push_back(std::move(slot));
}

const FormalSlot& FormalFreeProduct::slot(int i) const {
  if (i < 0 || i >= num_slots()) {
    throw input_error("unknown formal slot " + std::to_string(i));
  }
  return slots_[std::size_t(i)];
}

std::optional<int> FormalFreeProduct::base_slot() const {
  for (int i = 0; i < num_slots(); ++i) {
    if (slots_[std::size_t(i)].kind == FormalSlot::Kind::base) return i;
  }
  return std::nullopt;
}

FormalWord normalize(std::vector<FormalSyllable> raw,
                     const FormalFreeProduct& product) {
  FormalWord out;
  for (const auto& syl : raw) {
    const FormalSlot& s = product.slot(syl.slot);  // validates the slot
    std::int64_t exp = s.order > 0 ? wrap(syl.exp, s.order) : syl.exp;
    if (exp == 0) continue;
    if (!out.syllables.empty() && out.syllables.back().slot == syl.slot) {
      std::int64_t sum = out.syllables.back().exp + exp;
      if (s.order > 0) sum = wrap(sum, s.order);
      if (sum == 0) {
        out.syllables.pop_back();
      } else {
        out.syllables.back().exp = sum;
      }
    } else {
      out.syllables.push_back({syl.slot, exp});
    }
  }
  return out;
}

GroupWord evaluate(const FormalWord& word, const FormalFreeProduct& product,
                   const FreeProductPresentation& pres) {
  GroupWord out;
  for (const auto& syl : word.syllables) {
    out = mul(out, power_word(product.slot(syl.slot).eval, syl.exp, pres),
              pres);
  }
  return out;
}

nlohmann::json InjectivityResult::to_json() const {
  nlohmann::json doc = {{"bounds",
                         {{"max_syllables", max_syllables},
                          {"max_exponent", max_exponent}}},
                        {"words_checked", words_checked},
                        {"status", injective ? "certified" : "counterexample"}};
  if (counterexample) {
    nlohmann::json w = nlohmann::json::array();
    for (const auto& s : counterexample->syllables) {
      w.push_back({{"slot", s.slot}, {"exp", s.exp}});
    }
    doc["counterexample"] = w;
  }
  return doc;
}

InjectivityResult certify_injectivity(const FormalFreeProduct& product,
                                      const FreeProductPresentation& pres,
                                      std::int64_t max_syllables,
                                      std::int64_t max_exponent) {
  if (max_syllables < 1 || max_syllables > kMaxCertifySyllables ||
      max_exponent < 1 || max_exponent > kMaxCertifyExponent) {
    throw resource_error("certification bounds exceed the caps");
  }
  const int slots = product.num_slots();
  if (slots == 0) throw input_error("empty formal product");

  // valid exponents per slot, ascending
  std::vector<std::vector<std::int64_t>> exps(static_cast<std::size_t>(slots));
  for (int s = 0; s < slots; ++s) {
    const std::int64_t order = product.slot(s).order;
    for (std::int64_t e = -max_exponent; e <= max_exponent; ++e) {
      if (e == 0) continue;
      if (order > 0 && wrap(e, order) == 0) continue;
      exps[std::size_t(s)].push_back(e);
    }
    if (exps[std::size_t(s)].empty()) {
      throw input_error("slot " + std::to_string(s) +
                        " has no usable exponent under the bounds");
    }
  }

  // size estimate via DP on the last slot
  {
    std::vector<double> f(static_cast<std::size_t>(slots));
    double total = 0;
    for (int s = 0; s < slots; ++s) {
      f[std::size_t(s)] = double(exps[std::size_t(s)].size());
      total += f[std::size_t(s)];
    }
    for (std::int64_t n = 2; n <= max_syllables; ++n) {
      double sum = 0;
      for (double x : f) sum += x;
      std::vector<double> g(static_cast<std::size_t>(slots));
      for (int s = 0; s < slots; ++s) {
        g[std::size_t(s)] =
            double(exps[std::size_t(s)].size()) * (sum - f[std::size_t(s)]);
      }
      f = std::move(g);
      for (double x : f) total += x;
    }
    if (total > double(kMaxCertifyWords)) {
      throw resource_error("certification would enumerate about " +
                           std::to_string(std::int64_t(total)) +
                           " words; over the cap");
    }
  }

  // ambient syllable forms of eval^exp, tabulated once
  std::vector<std::vector<SyllableForm>> table(static_cast<std::size_t>(slots));
  for (int s = 0; s < slots; ++s) {
    for (std::int64_t e : exps[std::size_t(s)]) {
      table[std::size_t(s)].push_back(
          to_syllables(power_word(product.slot(s).eval, e, pres), pres));
    }
  }

  // One shared reduced-product stack. Pushing a form pops at most one stack
  // entry per form syllable and modifies at most one survivor, so saving that
  // tail lets the caller restore in place. Keeps the hot loop allocation-free.
  std::vector<Syllable> stack;
  stack.reserve(std::size_t(max_syllables) * 64 + 8);

  struct Undo {
    std::size_t old_size = 0;
    std::vector<Syllable> saved;
  };
  std::vector<Undo> undo(static_cast<std::size_t>(max_syllables));
  for (auto& u : undo) u.saved.reserve(64);

  auto push_form = [&](const SyllableForm& w, Undo& u) {
    u.old_size = stack.size();
    const std::size_t guard = std::min(stack.size(), w.syllables.size() + 1);
    u.saved.assign(stack.end() - std::ptrdiff_t(guard), stack.end());
    for (const auto& syl : w.syllables) {
      const auto& fac = pres.factor(syl.factor);
      if (!stack.empty() && stack.back().factor == syl.factor) {
        std::int64_t sum = stack.back().exp + syl.exp;
        if (fac.finite()) sum = wrap(sum, fac.order);
        if (sum == 0) {
          stack.pop_back();
        } else {
          stack.back().exp = sum;
        }
      } else {
        stack.push_back(syl);
      }
    }
  };
  auto pop_form = [&](const Undo& u) {
    stack.resize(u.old_size);
    std::copy(u.saved.begin(), u.saved.end(),
              stack.end() - std::ptrdiff_t(u.saved.size()));
  };

  InjectivityResult res;
  res.max_syllables = max_syllables;
  res.max_exponent = max_exponent;

  std::vector<FormalSyllable> path;
  auto recurse = [&](auto&& self, std::int64_t remaining,
                     int last_slot) -> bool {
    const bool leaf = remaining == 1;
    auto& u = undo[std::size_t(remaining) - 1];
    for (int s = 0; s < slots; ++s) {
      if (s == last_slot) continue;
      const auto& forms = table[std::size_t(s)];
      for (std::size_t ei = 0; ei < forms.size(); ++ei) {
        push_form(forms[ei], u);
        bool ok = true;
        if (leaf) {
          ++res.words_checked;
          if (stack.empty()) {
            path.push_back({s, exps[std::size_t(s)][ei]});
            res.counterexample = FormalWord{path};
            ok = false;
          }
        } else {
          path.push_back({s, exps[std::size_t(s)][ei]});
          ok = self(self, remaining - 1, s);
          path.pop_back();
        }
        pop_form(u);
        if (!ok) return false;
      }
    }
    return true;
  };

  for (std::int64_t n = 1; n <= max_syllables; ++n) {
    if (!recurse(recurse, n, -1)) {
      res.injective = false;
      return res;
    }
  }
  res.injective = true;
  return res;
}

}  // namespace dehnfill
