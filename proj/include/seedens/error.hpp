#pragma once

#include <stdexcept>
#include <string>

namespace seedens {

// Bad user input: malformed files, config contract violations, missing data.
// The CLI maps InputError to exit code 2; anything else is an internal error (1).
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace seedens
