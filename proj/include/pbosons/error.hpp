#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pbosons {

enum class ErrorKind {
  invalid_dimension,
  shape,
  not_hermitian,
  not_positive,
  overflow,
  no_vacuum,
  degenerate_vacuum,
  truncation_overrun,
  normalization_impossible,
  under_spanned,
  insufficient_data,
  conditioning,
  domain_exceeded,
  quadrature,
  spec,
  config,
  io,
};

inline constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_dimension: return "invalid-dimension";
    case ErrorKind::shape: return "shape";
    case ErrorKind::not_hermitian: return "not-hermitian";
    case ErrorKind::not_positive: return "not-positive";
    case ErrorKind::overflow: return "overflow";
    case ErrorKind::no_vacuum: return "no-vacuum";
    case ErrorKind::degenerate_vacuum: return "degenerate-vacuum";
    case ErrorKind::truncation_overrun: return "truncation-overrun";
    case ErrorKind::normalization_impossible: return "normalization-impossible";
    case ErrorKind::under_spanned: return "under-spanned";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::conditioning: return "conditioning";
    case ErrorKind::domain_exceeded: return "domain-exceeded";
    case ErrorKind::quadrature: return "quadrature";
    case ErrorKind::spec: return "spec";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Compact text for a double in error messages, e.g. 2.29e+16.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

/// Exception carrying a machine-readable kind plus an optional numeric payload
/// (offending eigenvalue, condition estimate, tail bound, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, double value = 0.0)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), value_(value) {}

  ErrorKind kind() const noexcept { return kind_; }
  double value() const noexcept { return value_; }

 private:
  ErrorKind kind_;
  double value_;
};

}  // namespace pbosons
