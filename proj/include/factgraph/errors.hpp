#pragma once

#include <stdexcept>
#include <string>

namespace factgraph {

struct EmptyInputError : std::runtime_error {
  explicit EmptyInputError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace factgraph
