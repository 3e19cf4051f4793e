#include "dehnfill/group.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include <nlohmann/json.hpp>

#include "dehnfill/errors.hpp"

namespace dehnfill {

namespace {

std::int64_t positive_mod(std::int64_t e, std::int64_t m) {
  std::int64_t r = e % m;
  return r < 0 ? r + m : r;
}

// Letter cost of one canonical syllable.
std::int64_t syllable_cost(const CyclicFactor& f, std::int64_t exp) {
  if (!f.finite()) return exp < 0 ? -exp : exp;
  const std::int64_t e = positive_mod(exp, f.order);
  return std::min(e, f.order - e);
}

void push_syllable(std::vector<Syllable>& out, const CyclicFactor& f,
                   int factor, std::int64_t exp) {
  if (f.finite()) exp = positive_mod(exp, f.order);
  if (exp == 0) return;
  if (!out.empty() && out.back().factor == factor) {
    std::int64_t merged = out.back().exp + exp;
    if (f.finite()) merged = positive_mod(merged, f.order);
    out.pop_back();
    if (merged != 0) push_syllable(out, f, factor, merged);
    return;
  }
  out.push_back({factor, exp});
}

}  // namespace

FreeProductPresentation::FreeProductPresentation(
    std::vector<CyclicFactor> factors)
    : factors_(std::move(factors)) {
  if (factors_.empty()) throw input_error("presentation needs >= 1 factor");
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    auto& f = factors_[i];
    if (f.order < 0 || f.order == 1) {
      throw input_error("cyclic factor order must be 0 (infinite) or >= 2");
    }
    if (f.name.empty()) {
      f.name = i < 26 ? std::string(1, char('a' + i))
                      : "g" + std::to_string(i);
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (factors_[j].name == f.name) {
        throw input_error("duplicate generator name '" + f.name + "'");
      }
    }
  }
}

const CyclicFactor& FreeProductPresentation::factor(int i) const {
  if (i < 0 || i >= num_factors()) {
    throw input_error("factor index " + std::to_string(i) + " out of range");
  }
  return factors_[static_cast<std::size_t>(i)];
}

int FreeProductPresentation::generator_index(const std::string& name) const {
  for (int i = 0; i < num_factors(); ++i) {
    if (factors_[static_cast<std::size_t>(i)].name == name) return i;
  }
  throw input_error("unknown generator '" + name + "'");
}

FreeProductPresentation FreeProductPresentation::from_json(
    const nlohmann::json& doc) {
  if (!doc.contains("factors") || !doc.at("factors").is_array()) {
    throw input_error("presentation document needs a \"factors\" array");
  }
  std::vector<CyclicFactor> factors;
  for (const auto& f : doc.at("factors")) {
    CyclicFactor cf;
    const std::string type = f.value("type", "");
    if (type == "Z") {
      cf.order = 0;
    } else if (type == "Z/m") {
      if (!f.contains("m")) throw input_error("factor of type Z/m needs m");
      cf.order = f.at("m").get<std::int64_t>();
    } else {
      throw input_error("factor type must be \"Z\" or \"Z/m\"");
    }
    cf.name = f.value("name", "");
    factors.push_back(std::move(cf));
  }
  return FreeProductPresentation(std::move(factors));
}

FillingSpec FillingSpec::from_json(const nlohmann::json& doc) {
  if (!doc.contains("fillings") || !doc.at("fillings").is_array()) {
    throw input_error("document needs a \"fillings\" array");
  }
  FillingSpec spec;
  for (const auto& k : doc.at("fillings")) {
    spec.indices.push_back(k.get<std::int64_t>());
  }
  return spec;
}

void FillingSpec::validate(const FreeProductPresentation& pres) const {
  if (static_cast<int>(indices.size()) != pres.num_factors()) {
    throw input_error("filling must list one index per factor");
  }
  for (int i = 0; i < pres.num_factors(); ++i) {
    const std::int64_t k = indices[static_cast<std::size_t>(i)];
    if (k < 1) throw input_error("filling index must be >= 1");
    const auto& f = pres.factor(i);
    if (f.finite() && f.order % k != 0) {
      throw input_error("filling index " + std::to_string(k) +
                        " does not divide the order of factor " +
                        std::to_string(i));
    }
  }
}

GroupWord reduce(std::vector<Letter> raw) {
  GroupWord w;
  for (const Letter& l : raw) {
    if (!w.letters.empty() && w.letters.back().gen == l.gen &&
        w.letters.back().sign == -l.sign) {
      w.letters.pop_back();
    } else {
      w.letters.push_back(l);
    }
  }
  return w;
}

GroupWord parse_word(const std::string& text,
                     const FreeProductPresentation& pres) {
  std::vector<Letter> raw;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c)) || c == '*') {
      ++i;
      continue;
    }
    if (c == '1' && raw.empty() && text.find_first_not_of(" \t1", i) ==
                                       std::string::npos) {
      break;  // explicit identity
    }
    // longest generator-name match
    int gen = -1;
    std::size_t best_len = 0;
    for (int g = 0; g < pres.num_factors(); ++g) {
      const std::string& name = pres.factor(g).name;
      if (name.size() > best_len && text.compare(i, name.size(), name) == 0) {
        gen = g;
        best_len = name.size();
      }
    }
    if (gen < 0) {
      throw input_error("unknown generator at position " + std::to_string(i) +
                        " in '" + text + "'");
    }
    i += best_len;
    std::int64_t exp = 1;
    if (i < text.size() && text[i] == '^') {
      ++i;
      bool neg = false;
      if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
        neg = text[i] == '-';
        ++i;
      }
      if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i]))) {
        throw input_error("malformed exponent in '" + text + "'");
      }
      exp = 0;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        exp = exp * 10 + (text[i] - '0');
        if (exp > 1'000'000) throw input_error("exponent too large");
        ++i;
      }
      if (neg) exp = -exp;
    }
    const int sign = exp < 0 ? -1 : 1;
    for (std::int64_t n = 0; n < (exp < 0 ? -exp : exp); ++n) {
      raw.push_back({gen, sign});
    }
  }
  return normal_form(reduce(std::move(raw)), pres);
}

std::string format_word(const GroupWord& w,
                        const FreeProductPresentation& pres) {
  if (w.letters.empty()) return "1";
  std::string out;
  std::size_t i = 0;
  while (i < w.letters.size()) {
    std::size_t j = i;
    while (j < w.letters.size() && w.letters[j] == w.letters[i]) ++j;
    const std::int64_t exp =
        static_cast<std::int64_t>(j - i) * w.letters[i].sign;
    if (!out.empty()) out += " ";
    out += pres.factor(w.letters[i].gen).name;
    if (exp != 1) out += "^" + std::to_string(exp);
    i = j;
  }
  return out;
}

SyllableForm to_syllables(const GroupWord& w,
                          const FreeProductPresentation& pres) {
  SyllableForm form;
  for (const Letter& l : w.letters) {
    push_syllable(form.syllables, pres.factor(l.gen), l.gen, l.sign);
  }
  return form;
}

GroupWord from_syllables(const SyllableForm& s,
                         const FreeProductPresentation& pres) {
  GroupWord w;
  for (const Syllable& syl : s.syllables) {
    const auto& f = pres.factor(syl.factor);
    std::int64_t exp = syl.exp;
    if (f.finite()) {
      exp = positive_mod(exp, f.order);
      // shortlex-minimal spelling; ties go to the positive power
      if (2 * exp > f.order) exp -= f.order;
    }
    const int sign = exp < 0 ? -1 : 1;
    for (std::int64_t n = 0; n < (exp < 0 ? -exp : exp); ++n) {
      w.letters.push_back({syl.factor, sign});
    }
  }
  return w;
}

GroupWord normal_form(const GroupWord& w,
                      const FreeProductPresentation& pres) {
  return from_syllables(to_syllables(w, pres), pres);
}

GroupWord inverse_word(const GroupWord& w) {
  GroupWord inv;
  inv.letters.reserve(w.letters.size());
  for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it) {
    inv.letters.push_back({it->gen, -it->sign});
  }
  return inv;
}

GroupWord mul(const GroupWord& a, const GroupWord& b,
              const FreeProductPresentation& pres) {
  std::vector<Letter> raw = a.letters;
  raw.insert(raw.end(), b.letters.begin(), b.letters.end());
  return normal_form(reduce(std::move(raw)), pres);
}

GroupWord conjugate(const GroupWord& g, const GroupWord& w,
                    const FreeProductPresentation& pres) {
  return mul(mul(g, w, pres), inverse_word(g), pres);
}

bool is_trivial(const GroupWord& w, const FreeProductPresentation& pres) {
  return to_syllables(w, pres).is_identity();
}

bool equal_elements(const GroupWord& a, const GroupWord& b,
                    const FreeProductPresentation& pres) {
  return to_syllables(a, pres) == to_syllables(b, pres);
}

std::int64_t word_length(const GroupWord& w,
                         const FreeProductPresentation& pres) {
  std::int64_t len = 0;
  for (const Syllable& s : to_syllables(w, pres).syllables) {
    len += syllable_cost(pres.factor(s.factor), s.exp);
  }
  return len;
}

CyclicReduction cyclic_reduction(const GroupWord& w,
                                 const FreeProductPresentation& pres) {
  CyclicReduction res;
  res.core = to_syllables(w, pres);
  std::vector<Letter> conj;
  auto& syl = res.core.syllables;
  while (syl.size() >= 2 && syl.front().factor == syl.back().factor) {
    const Syllable head = syl.front();
    const Syllable tail = syl.back();
    syl.erase(syl.begin());
    syl.pop_back();
    push_syllable(syl, pres.factor(head.factor), head.factor,
                  tail.exp + head.exp);
    // w = head * core' * head^-1 relative to the new core'
    SyllableForm head_form;
    head_form.syllables.push_back(head);
    const GroupWord head_word = from_syllables(head_form, pres);
    conj.insert(conj.end(), head_word.letters.begin(),
                head_word.letters.end());
  }
  res.conjugator = normal_form(reduce(std::move(conj)), pres);
  return res;
}

bool shortlex_less(const GroupWord& a, const GroupWord& b,
                   const FreeProductPresentation& pres) {
  const GroupWord ca = normal_form(a, pres);
  const GroupWord cb = normal_form(b, pres);
  if (ca.letters.size() != cb.letters.size()) {
    return ca.letters.size() < cb.letters.size();
  }
  auto key = [](const Letter& l) { return l.gen * 2 + (l.sign < 0 ? 1 : 0); };
  for (std::size_t i = 0; i < ca.letters.size(); ++i) {
    if (key(ca.letters[i]) != key(cb.letters[i])) {
      return key(ca.letters[i]) < key(cb.letters[i]);
    }
  }
  return false;
}

GroupWord coset_representative(const GroupWord& w, int factor,
                               const FreeProductPresentation& pres) {
  SyllableForm form = to_syllables(w, pres);
  if (!form.syllables.empty() && form.syllables.back().factor == factor) {
    form.syllables.pop_back();
  }
  return from_syllables(form, pres);
}

SyllableForm quotient_image(const GroupWord& w,
                            const FreeProductPresentation& pres,
                            const FillingSpec& filling) {
  filling.validate(pres);
  SyllableForm img;
  for (const Syllable& s : to_syllables(w, pres).syllables) {
    const std::int64_t k = filling.indices[static_cast<std::size_t>(s.factor)];
    const std::int64_t e = positive_mod(s.exp, k);
    if (e == 0) continue;
    if (!img.syllables.empty() && img.syllables.back().factor == s.factor) {
      const std::int64_t merged =
          positive_mod(img.syllables.back().exp + e, k);
      img.syllables.pop_back();
      if (merged != 0) img.syllables.push_back({s.factor, merged});
      // a vanished syllable may expose two equal neighbors; re-merge
      while (img.syllables.size() >= 2 &&
             img.syllables[img.syllables.size() - 2].factor ==
                 img.syllables.back().factor) {
        const Syllable b = img.syllables.back();
        img.syllables.pop_back();
        const Syllable a = img.syllables.back();
        img.syllables.pop_back();
        const std::int64_t kk =
            filling.indices[static_cast<std::size_t>(a.factor)];
        const std::int64_t m2 = positive_mod(a.exp + b.exp, kk);
        if (m2 != 0) img.syllables.push_back({a.factor, m2});
      }
    } else {
      img.syllables.push_back({s.factor, e});
    }
  }
  return img;
}

bool kernel_membership(const GroupWord& w,
                       const FreeProductPresentation& pres,
                       const FillingSpec& filling) {
  return quotient_image(w, pres, filling).is_identity();
}

std::optional<std::int64_t> image_order(const GroupWord& w,
                                        const FreeProductPresentation& pres,
                                        const FillingSpec& filling) {
  SyllableForm img = quotient_image(w, pres, filling);
  auto& syl = img.syllables;
  // cyclic reduction in the quotient free product
  while (syl.size() >= 2 && syl.front().factor == syl.back().factor) {
    const std::int64_t k =
        filling.indices[static_cast<std::size_t>(syl.front().factor)];
    const std::int64_t merged =
        positive_mod(syl.front().exp + syl.back().exp, k);
    const int factor = syl.front().factor;
    syl.erase(syl.begin());
    syl.pop_back();
    if (merged != 0) syl.insert(syl.begin(), {factor, merged});
  }
  if (syl.empty()) return 1;
  if (syl.size() == 1) {
    const std::int64_t k =
        filling.indices[static_cast<std::size_t>(syl.front().factor)];
    return k / std::gcd(k, syl.front().exp);
  }
  return std::nullopt;
}

std::vector<GroupWord> enumerate_ball(const FreeProductPresentation& pres,
                                      std::int64_t radius,
                                      std::int64_t radius_cap,
                                      std::int64_t element_cap) {
  if (radius < 0) throw input_error("ball radius must be >= 0");
  if (radius > radius_cap) {
    throw resource_error("ball radius " + std::to_string(radius) +
                         " exceeds the cap " + std::to_string(radius_cap));
  }
  std::vector<GroupWord> out;
  SyllableForm current;

  auto emit = [&]() {
    if (static_cast<std::int64_t>(out.size()) >= element_cap) {
      throw resource_error("ball exceeds the element cap " +
                           std::to_string(element_cap));
    }
    out.push_back(from_syllables(current, pres));
  };

  auto rec = [&](auto&& self, std::int64_t budget, int last_factor) -> void {
    emit();
    for (int i = 0; i < pres.num_factors(); ++i) {
      if (i == last_factor) continue;
      const auto& f = pres.factor(i);
      const std::int64_t top = f.finite() ? f.order - 1 : budget;
      for (std::int64_t e = f.finite() ? 1 : -budget; e <= top; ++e) {
        if (e == 0) continue;
        const std::int64_t cost = syllable_cost(f, e);
        if (cost > budget || cost == 0) continue;
        current.syllables.push_back({i, e});
        self(self, budget - cost, i);
        current.syllables.pop_back();
      }
    }
  };
  rec(rec, radius, -1);

  std::sort(out.begin(), out.end(),
            [&](const GroupWord& a, const GroupWord& b) {
              return shortlex_less(a, b, pres);
            });
  return out;
}

}  // namespace dehnfill
