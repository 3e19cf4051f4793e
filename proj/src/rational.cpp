#include "dehnfill/rational.hpp"

#include "dehnfill/errors.hpp"

namespace dehnfill {

Rat parse_rational(const std::string& text) {
  if (text.empty()) throw input_error("empty rational literal");
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) {
      return Rat(BigInt(text));
    }
    BigInt num(text.substr(0, slash));
    BigInt den(text.substr(slash + 1));
    if (den == 0) throw input_error("zero denominator in '" + text + "'");
    return Rat(num, den);
  } catch (const std::exception&) {
    throw input_error("malformed rational literal '" + text + "'");
  }
}

std::string format_rational(const Rat& r) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

}  // namespace dehnfill
