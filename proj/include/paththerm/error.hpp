#pragma once

#include <stdexcept>
#include <string>

namespace paththerm {

/// Failure categories. The CLI maps these onto stable exit codes.
enum class ErrorKind {
  invalid_argument,
  numerical_failure,
  precision_failure,
  infeasible_energy,
  infeasible_pair,
  infeasible_total_energy,
  ambiguous_temperature,
  io_failure,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& w) : Error(ErrorKind::invalid_argument, w) {}
};
struct NumericalFailure : Error {
  explicit NumericalFailure(const std::string& w) : Error(ErrorKind::numerical_failure, w) {}
};
struct PrecisionFailure : Error {
  explicit PrecisionFailure(const std::string& w) : Error(ErrorKind::precision_failure, w) {}
};
struct InfeasibleEnergy : Error {
  explicit InfeasibleEnergy(const std::string& w) : Error(ErrorKind::infeasible_energy, w) {}
};
struct InfeasiblePair : Error {
  explicit InfeasiblePair(const std::string& w) : Error(ErrorKind::infeasible_pair, w) {}
};
struct InfeasibleTotalEnergy : Error {
  explicit InfeasibleTotalEnergy(const std::string& w)
      : Error(ErrorKind::infeasible_total_energy, w) {}
};
struct AmbiguousTemperature : Error {
  explicit AmbiguousTemperature(const std::string& w)
      : Error(ErrorKind::ambiguous_temperature, w) {}
};
struct IoFailure : Error {
  explicit IoFailure(const std::string& w) : Error(ErrorKind::io_failure, w) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

}  // namespace paththerm
