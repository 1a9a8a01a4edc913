#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gchain {

/// Argument outside the mathematical domain of a function (e.g. q outside [0,1]).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed model, network or configuration.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Fixed-point or descent iteration hit its cap.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, std::size_t iterations, double residual)
      : std::runtime_error(what), iterations_(iterations), residual_(residual) {}

  std::size_t iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  std::size_t iterations_;
  double residual_;
};

/// Some queue has no stationary distribution (its utilization reaches 1).
class Unstable : public std::runtime_error {
 public:
  Unstable(const std::string& what, std::vector<std::size_t> queues)
      : std::runtime_error(what), queues_(std::move(queues)) {}

  /// Zero-based indices of the offending queues.
  const std::vector<std::size_t>& queues() const noexcept { return queues_; }

 private:
  std::vector<std::size_t> queues_;
};

/// The closed-form optimum leaves the interior of the feasible simplex.
class InteriorViolation : public std::runtime_error {
 public:
  InteriorViolation(const std::string& what, std::vector<std::size_t> coords)
      : std::runtime_error(what), coords_(std::move(coords)) {}

  const std::vector<std::size_t>& coordinates() const noexcept { return coords_; }

 private:
  std::vector<std::size_t> coords_;
};

/// No allocation keeps every warehouse stable.
class Infeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gchain
