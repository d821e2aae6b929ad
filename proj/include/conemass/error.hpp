#pragma once

#include <stdexcept>
#include <string>

namespace conemass {

/// Failure categories. The CLI maps these onto its exit codes.
enum class ErrorKind {
  kDomain,     // bad argument (e.g. r <= 0, n < 3)
  kConfig,     // malformed or out-of-range experiment configuration
  kSolver,     // non-convergence, degenerate linear system, critical request
  kInvariant,  // a computed result violates an expected property
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace conemass
