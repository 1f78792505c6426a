#pragma once

#include <stdexcept>
#include <string>

namespace nbp {

// Problems with input data: malformed files, invalid characters, taxa
// mismatches. The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated numerical invariants (a broken stochastic matrix, a failed
// eigendecomposition). These indicate a bug rather than bad input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nbp
