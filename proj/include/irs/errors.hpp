#pragma once

#include <stdexcept>
#include <string>

namespace irs {

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct SymmetryError : DomainError {
  using DomainError::DomainError;
};

struct PsdViolation : DomainError {
  using DomainError::DomainError;
};

struct RankDeficiency : std::runtime_error {
  RankDeficiency(const std::string& what, int attained)
      : std::runtime_error(what), attained_rank(attained) {}
  int attained_rank;
};

struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual(residual) {}
  double residual;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace irs
