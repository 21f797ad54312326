#pragma once

#include <stdexcept>
#include <string>

namespace epsis {

/// A workload whose estimated cost exceeds the configured budget.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, double estimate)
      : std::runtime_error(what), estimate_(estimate) {}
  [[nodiscard]] double estimate() const noexcept { return estimate_; }

 private:
  double estimate_;
};

/// A numerical routine could not meet its accuracy contract.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace epsis
