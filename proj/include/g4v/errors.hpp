#pragma once

#include <stdexcept>
#include <string>

namespace g4v {

/// Input file violated the documented schema (missing/ill-typed field, bad row).
struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

/// Query outside the validity range of a fitted curve or table.
struct RangeError : std::runtime_error {
  explicit RangeError(const std::string& what) : std::runtime_error(what) {}
};

/// Tensor frame/symmetry contract violated (asymmetric input, frame mismatch,
/// residual too large for an on-axis site).
struct FrameError : std::runtime_error {
  explicit FrameError(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative solver failed to reach its tolerance.
struct ConvergenceError : std::runtime_error {
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace g4v
