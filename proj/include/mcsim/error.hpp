#pragma once

#include <stdexcept>
#include <string>

namespace mcsim {

// Precondition and configuration failures. The CLI maps these to exit code 2
// (usage/validation); any other exception is a runtime failure (exit code 1).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mcsim
