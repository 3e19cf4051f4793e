#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dehnfill/rational.hpp"

#include <nlohmann/json_fwd.hpp>

namespace dehnfill {

enum class CheckStatus { pass, fail, not_applicable };

std::string to_string(CheckStatus s);

/// Result of one verified inequality or axiom.
struct Check {
  Check() = default;
  explicit Check(std::string n) : name(std::move(n)) {}

  std::string name;
  CheckStatus status = CheckStatus::pass;
  Rat worst_slack{0};       // worst witnessed slack (bound minus margin)
  std::string witness;      // empty when nothing interesting to report
  std::uint64_t checked = 0;

  void record(const Rat& slack, const std::string& w);
  void record_violation(const std::string& w);
};

struct SuiteReport {
  std::vector<Check> checks;

  bool all_passed() const;
  Check* find(const std::string& name);
  const Check* find(const std::string& name) const;
  nlohmann::json to_json() const;
};

}  // namespace dehnfill
