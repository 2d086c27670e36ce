#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace gaborikl {

/// Invalid argument or precondition violation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File could not be read, written or decoded.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Base for iterative solvers that ran out of budget.
class ConvergenceFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Convergence failure that carries the best iterate reached so far.
template <class Iterate>
class ConvergenceError : public ConvergenceFailure {
 public:
  ConvergenceError(const std::string& what, Iterate best)
      : ConvergenceFailure(what), best_(std::move(best)) {}

  const Iterate& best() const noexcept { return best_; }

 private:
  Iterate best_;
};

}  // namespace gaborikl
