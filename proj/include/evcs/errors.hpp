#pragma once

#include <stdexcept>
#include <string>

namespace evcs {

// A lower-level problem (fleet LP or day-ahead market LP) has no optimum.
class LowerLevelError : public std::runtime_error {
 public:
  LowerLevelError(std::string subproblem, const std::string& what)
      : std::runtime_error(subproblem + ": " + what), subproblem_(std::move(subproblem)) {}

  const std::string& subproblem() const { return subproblem_; }

 private:
  std::string subproblem_;
};

}  // namespace evcs
