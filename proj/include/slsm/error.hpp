#pragma once

#include <stdexcept>
#include <string>

namespace slsm {

/// Failure classes. Each maps to exactly one CLI exit code (see exit_code()).
enum class ErrorKind {
  contract,          // precondition violated by the caller
  domain,            // argument outside the mathematical domain
  degenerate_scale,  // zero-variance input to standardize
  io,                // unreadable / malformed / unwritable files
  singular,          // rank-deficient design matrix
  numeric,           // non-finite values or failed quadrature
  sampler_failure,   // rejection loop exceeded its proposal cap
  non_convergence,   // iterative fit did not meet its tolerance
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::contract: return "contract";
    case ErrorKind::domain: return "domain";
    case ErrorKind::degenerate_scale: return "degenerate_scale";
    case ErrorKind::io: return "io";
    case ErrorKind::singular: return "singular";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::sampler_failure: return "sampler_failure";
    case ErrorKind::non_convergence: return "non_convergence";
  }
  return "unknown";
}

/// 0 ok, 2 usage/input, 3 non-convergence, 4 numerical failure.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::contract:
    case ErrorKind::domain:
    case ErrorKind::degenerate_scale:
    case ErrorKind::io:
      return 2;
    case ErrorKind::non_convergence:
      return 3;
    case ErrorKind::singular:
    case ErrorKind::numeric:
    case ErrorKind::sampler_failure:
      return 4;
  }
  return 4;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

namespace detail {

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) throw Error(kind, msg);
}

}  // namespace detail
}  // namespace slsm
