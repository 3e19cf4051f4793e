#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dehnfill {

using BigInt = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

/// Parses "p", "-p" or "p/q" into an exact rational.
Rat parse_rational(const std::string& text);

/// Formats as "p" or "p/q" (canonical lowest terms, denominator positive).
std::string format_rational(const Rat& r);

inline Rat rat(std::int64_t num, std::int64_t den = 1) {
  return Rat(BigInt(num), BigInt(den));
}

inline std::int64_t to_int64(const BigInt& v) {
  return static_cast<std::int64_t>(v);
}

}  // namespace dehnfill
