#pragma once

#include <stdexcept>
#include <string>

namespace dehnfill {

/// Malformed or out-of-domain caller data (unknown point, bad JSON, ...).
/// CLI exit code 2.
struct input_error : std::runtime_error {
  explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A declared precondition does not hold (ball too small, elliptic element
/// where a loxodromic one is required, finite-order image, ...).
/// CLI exit code 3.
struct precondition_error : std::runtime_error {
  explicit precondition_error(const std::string& msg)
      : std::runtime_error(msg) {}
};

/// A configured resource cap was exceeded. CLI exit code 3.
struct resource_error : std::runtime_error {
  explicit resource_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dehnfill
