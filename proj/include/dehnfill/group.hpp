#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace dehnfill {

/// One letter of a word: a generator or its inverse.
struct Letter {
  int gen = 0;    // factor index
  int sign = 1;   // +1 or -1
  friend bool operator==(const Letter&, const Letter&) = default;
};

/// Freely reduced word over the presentation's generators.
struct GroupWord {
  std::vector<Letter> letters;
  bool is_identity() const { return letters.empty(); }
  friend bool operator==(const GroupWord&, const GroupWord&) = default;
};

struct CyclicFactor {
  std::int64_t order = 0;  // 0 = infinite cyclic
  std::string name;
  bool finite() const { return order > 0; }
};

class FreeProductPresentation {
 public:
  explicit FreeProductPresentation(std::vector<CyclicFactor> factors);
  static FreeProductPresentation from_json(const nlohmann::json& doc);

  int num_factors() const { return static_cast<int>(factors_.size()); }
  const CyclicFactor& factor(int i) const;
  /// input_error for unknown generator names.
  int generator_index(const std::string& name) const;

 private:
  std::vector<CyclicFactor> factors_;
};

/// One finite-index normal subgroup index per factor.
struct FillingSpec {
  std::vector<std::int64_t> indices;

  static FillingSpec from_json(const nlohmann::json& doc);
  /// input_error when sizes mismatch, some k < 1, or k does not divide a
  /// finite factor's order.
  void validate(const FreeProductPresentation& pres) const;
};

struct Syllable {
  int factor = 0;
  std::int64_t exp = 0;
  friend bool operator==(const Syllable&, const Syllable&) = default;
};

/// Canonical alternating normal form. Exponents of finite factors are stored
/// as residues in [1, m-1]; infinite factors keep their signed exponent.
struct SyllableForm {
  std::vector<Syllable> syllables;
  bool is_identity() const { return syllables.empty(); }
  friend bool operator==(const SyllableForm&, const SyllableForm&) = default;
};

/// Free reduction of a raw letter sequence.
GroupWord reduce(std::vector<Letter> raw);

/// Parses "a b^-1 a^3" (also "ab^2", "a*b"); input_error on malformed text.
GroupWord parse_word(const std::string& text,
                     const FreeProductPresentation& pres);
std::string format_word(const GroupWord& w,
                        const FreeProductPresentation& pres);

SyllableForm to_syllables(const GroupWord& w,
                          const FreeProductPresentation& pres);
/// Shortlex-minimal letter spelling of a syllable form.
GroupWord from_syllables(const SyllableForm& s,
                         const FreeProductPresentation& pres);

/// Canonical shortlex-minimal spelling of the group element.
GroupWord normal_form(const GroupWord& w,
                      const FreeProductPresentation& pres);

GroupWord inverse_word(const GroupWord& w);
GroupWord mul(const GroupWord& a, const GroupWord& b,
              const FreeProductPresentation& pres);
/// g w g^-1, normalized.
GroupWord conjugate(const GroupWord& g, const GroupWord& w,
                    const FreeProductPresentation& pres);

bool is_trivial(const GroupWord& w, const FreeProductPresentation& pres);
bool equal_elements(const GroupWord& a, const GroupWord& b,
                    const FreeProductPresentation& pres);

/// Cayley-graph word length: minimal number of generator letters.
std::int64_t word_length(const GroupWord& w,
                         const FreeProductPresentation& pres);

/// Cyclic reduction in the free product; returns the reduced core and the
/// conjugator c with w = c * core * c^-1.
struct CyclicReduction {
  SyllableForm core;
  GroupWord conjugator;
};
CyclicReduction cyclic_reduction(const GroupWord& w,
                                 const FreeProductPresentation& pres);

/// Shortlex order on canonical words: length first, then letter-wise with
/// a < a^-1 < b < b^-1 < ...
bool shortlex_less(const GroupWord& a, const GroupWord& b,
                   const FreeProductPresentation& pres);

/// Shortlex-minimal representative of the coset w * P_i.
GroupWord coset_representative(const GroupWord& w, int factor,
                               const FreeProductPresentation& pres);

/// Image of w in (P_1/N_1) * ... * (P_n/N_n), each quotient factor Z/k_i,
/// reduced. Exponents are residues in [1, k_i - 1].
SyllableForm quotient_image(const GroupWord& w,
                            const FreeProductPresentation& pres,
                            const FillingSpec& filling);

/// True iff w lies in K, the kernel of the filling quotient.
bool kernel_membership(const GroupWord& w,
                       const FreeProductPresentation& pres,
                       const FillingSpec& filling);

/// Order of the image of w in the filling quotient; nullopt = infinite.
std::optional<std::int64_t> image_order(const GroupWord& w,
                                        const FreeProductPresentation& pres,
                                        const FillingSpec& filling);

inline constexpr std::int64_t kDefaultRadiusCap = 12;
inline constexpr std::int64_t kDefaultBallCap = 2'000'000;

/// All group elements of word length <= radius in shortlex order.
/// resource_error when radius exceeds radius_cap or the ball exceeds
/// element_cap entries.
std::vector<GroupWord> enumerate_ball(
    const FreeProductPresentation& pres, std::int64_t radius,
    std::int64_t radius_cap = kDefaultRadiusCap,
    std::int64_t element_cap = kDefaultBallCap);

}  // namespace dehnfill
