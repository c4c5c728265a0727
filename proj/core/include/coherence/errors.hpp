#ifndef COHERENCE_ERRORS_HPP_
#define COHERENCE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace coherence {

// Input lies outside the generator's domain (or an op's precondition).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Quadratic generator matrix is not invertible where inversion is required.
class SingularMatrix : public std::runtime_error {
 public:
  explicit SingularMatrix(const std::string& what) : std::runtime_error(what) {}
};

// An involution-only operation was called with a non-involutive map.
class NotInvolution : public std::runtime_error {
 public:
  explicit NotInvolution(const std::string& what) : std::runtime_error(what) {}
};

// Constraint set is empty (or no feasible point could be certified).
class Infeasible : public std::runtime_error {
 public:
  explicit Infeasible(const std::string& what) : std::runtime_error(what) {}
};

// Iteration cap or numerical breakdown inside a solver.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// A bound evaluator needed mu or L and the generator does not declare it.
class MissingConstant : public std::runtime_error {
 public:
  explicit MissingConstant(const std::string& what) : std::runtime_error(what) {}
};

// Config file failed schema validation.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Unknown verification suite name.
class UnknownSuite : public std::runtime_error {
 public:
  explicit UnknownSuite(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace coherence

#endif  // COHERENCE_ERRORS_HPP_
