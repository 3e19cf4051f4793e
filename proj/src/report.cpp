#include "dehnfill/report.hpp"

#include <nlohmann/json.hpp>

namespace dehnfill {

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::not_applicable: return "not-applicable";
  }
  return "unknown";
}

void Check::record(const Rat& slack, const std::string& w) {
  ++checked;
  if (checked == 1 || slack > worst_slack) {
    worst_slack = slack;
    witness = w;
  }
  if (slack > 0 && status == CheckStatus::pass) {
    status = CheckStatus::fail;
  }
}

void Check::record_violation(const std::string& w) {
  ++checked;
  status = CheckStatus::fail;
  if (witness.empty()) witness = w;
}

bool SuiteReport::all_passed() const {
  for (const auto& c : checks) {
    if (c.status == CheckStatus::fail) return false;
  }
  return true;
}

Check* SuiteReport::find(const std::string& name) {
  for (auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const Check* SuiteReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

nlohmann::json SuiteReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name},
                   {"status", to_string(c.status)},
                   {"worst_slack", format_rational(c.worst_slack)},
                   {"witness", c.witness},
                   {"checked", c.checked}});
  }
  return arr;
}

}  // namespace dehnfill
