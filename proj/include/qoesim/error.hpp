#pragma once

#include <stdexcept>
#include <string>

namespace qoesim {

/// Malformed or inconsistent input: bad files, invalid parameters, violated
/// preconditions.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A search (e.g. tolerance calibration) could not reach its target.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Instance too large for an exact method.
class TractabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InputError(what);
}

}  // namespace detail
}  // namespace qoesim
