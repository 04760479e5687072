#pragma once

#include <stdexcept>
#include <string>

namespace termset {

// Bad or inconsistent input data: malformed records, unknown ids, infeasible
// requests. The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A structural invariant of an internal data structure does not hold. The CLI
// maps this to exit code 3.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Invalid arguments or configuration supplied by the caller (exit code 1).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace termset
