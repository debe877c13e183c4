// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dmft {

/// Failure categories shared by every module. The CLI maps them onto exit codes.
enum class ErrorKind {
  invalid_argument,
  numeric_domain,
  class_mismatch,
  degenerate_input,
  insufficient_data,
  no_finite_fixed_point,
  no_critical_point,
  infeasible_budget,
  unreachable_field,
  invalid_regime,
  unsupported,
  cannot_realize_correlation,
  missing_input,
  io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::numeric_domain: return "numeric-domain";
    case ErrorKind::class_mismatch: return "class-mismatch";
    case ErrorKind::degenerate_input: return "degenerate-input";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::no_finite_fixed_point: return "no-finite-fixed-point";
    case ErrorKind::no_critical_point: return "no-critical-point";
    case ErrorKind::infeasible_budget: return "infeasible-budget";
    case ErrorKind::unreachable_field: return "unreachable-field";
    case ErrorKind::invalid_regime: return "invalid-regime";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::cannot_realize_correlation: return "cannot-realize-correlation";
    case ErrorKind::missing_input: return "missing-input";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Thrown when an integrand returns NaN/inf; carries the offending abscissa.
class NumericDomainError : public Error {
 public:
  NumericDomainError(double node, const std::string& what)
      : Error(ErrorKind::numeric_domain, what + " (node " + std::to_string(node) + ")"),
        node_(node) {}

  double node() const noexcept { return node_; }

 private:
  double node_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace dmft
