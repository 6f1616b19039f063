#ifndef POLYFIT_COMMON_HPP
#define POLYFIT_COMMON_HPP

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace polyfit {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

/// Caller misuse: bad dimensions, malformed documents, out-of-range inputs.
/// Maps to exit code 64 in the CLI.
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Base for runtime failures (solver breakdown, invalid geometry, aborted
/// training). Maps to exit code 2 in the CLI.
class RuntimeError : public std::runtime_error {
 public:
  explicit RuntimeError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A constraint system turned out to have no feasible point.
class InfeasibleError : public RuntimeError {
 public:
  explicit InfeasibleError(const std::string& msg) : RuntimeError(msg) {}
};

/// An LP ray escapes to infinity where a bounded optimum was required.
class UnboundedError : public RuntimeError {
 public:
  explicit UnboundedError(const std::string& msg) : RuntimeError(msg) {}
};

/// A polytope that must contain a ball of radius >= 0 does not.
class EmptyPolytopeError : public RuntimeError {
 public:
  explicit EmptyPolytopeError(const std::string& msg) : RuntimeError(msg) {}
};

/// Iterative method hit its cap without closing its tolerance.
class ConvergenceError : public RuntimeError {
 public:
  explicit ConvergenceError(const std::string& msg) : RuntimeError(msg) {}
};

/// Broken internal invariant; indicates a bug rather than bad input.
class InternalError : public RuntimeError {
 public:
  explicit InternalError(const std::string& msg) : RuntimeError(msg) {}
};

}  // namespace polyfit

#endif  // POLYFIT_COMMON_HPP
