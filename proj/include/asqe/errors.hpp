#pragma once

#include <stdexcept>
#include <string>

namespace asqe {

/// Numerical breakdown (eigensolve failure, exp overflow, trajectory blow-up).
/// Configuration and argument problems use std::invalid_argument instead.
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace asqe
