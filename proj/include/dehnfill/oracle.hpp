#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dehnfill/group.hpp"
#include "dehnfill/windmill.hpp"

namespace dehnfill {

/// One free factor of a formal free product: the cyclic base or a conjugated
/// rotation subgroup, together with its evaluation word in the ambient group.
struct FormalSlot {
  enum class Kind { base, rotation };
  Kind kind = Kind::rotation;
  GroupWord eval;          // generator image in the ambient group
  std::int64_t order = 0;  // cyclic order of the slot, 0 = infinite
  int factor = -1;         // rotation slots only
  GroupWord conjugator;
};

class FormalFreeProduct {
 public:
  static FormalFreeProduct from_ledger(const FreeFactorLedger& ledger,
                                       const FreeProductPresentation& pres,
                                       const FillingSpec& filling);

  void add_slot(FormalSlot slot);
  int num_slots() const { return static_cast<int>(slots_.size()); }
  const FormalSlot& slot(int i) const;
  std::optional<int> base_slot() const;

 private:
  std::vector<FormalSlot> slots_;
};

struct FormalSyllable {
  int slot = 0;
  std::int64_t exp = 0;
  friend bool operator==(const FormalSyllable&, const FormalSyllable&) =
      default;
};

/// Reduced word of the formal free product: no zero exponents, no two
/// consecutive syllables in the same slot.
struct FormalWord {
  std::vector<FormalSyllable> syllables;
  bool is_identity() const { return syllables.empty(); }
  friend bool operator==(const FormalWord&, const FormalWord&) = default;
};

/// Merges same-slot neighbours mod the slot order, drops vanishing
/// exponents; input_error for unknown slots.
FormalWord normalize(std::vector<FormalSyllable> raw,
                     const FormalFreeProduct& product);

/// The canonical morphism into the ambient group.
GroupWord evaluate(const FormalWord& word, const FormalFreeProduct& product,
                   const FreeProductPresentation& pres);

inline constexpr std::int64_t kMaxCertifySyllables = 6;
inline constexpr std::int64_t kMaxCertifyExponent = 8;
inline constexpr std::int64_t kMaxCertifyWords = 2'000'000'000;

struct InjectivityResult {
  bool injective = false;
  std::int64_t words_checked = 0;
  std::int64_t max_syllables = 0;
  std::int64_t max_exponent = 0;
  std::optional<FormalWord> counterexample;

  nlohmann::json to_json() const;
};

/// Bounded exhaustion of nonempty reduced formal words (syllable count, then
/// slot, then exponent): every one must evaluate to a nontrivial ambient
/// element. resource_error when the bounds exceed the caps.
InjectivityResult certify_injectivity(const FormalFreeProduct& product,
                                      const FreeProductPresentation& pres,
                                      std::int64_t max_syllables,
                                      std::int64_t max_exponent);

}  // namespace dehnfill
