#pragma once

#include <stdexcept>
#include <string>

namespace fraclap {

// Bad arguments or configuration. The CLI maps this to exit code 2.
class InvalidInput : public std::runtime_error {
 public:
  explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

// Factorization failure, non-convergence, inconsistent numerics. Exit code 3.
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fraclap
