#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace pcesocp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedDistribution : public Error {
 public:
  using Error::Error;
};

/// Dimension or row-count mismatch between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Collocation design whose Vandermonde matrix is rank deficient.
class IllPosedDesign : public Error {
 public:
  using Error::Error;
};

class MissingWeights : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a function (e.g. time outside the horizon).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A simulation produced a non-finite state.
class DivergenceError : public Error {
 public:
  static constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

  DivergenceError(double time, std::size_t node = kNoNode)
      : Error(make_message(time, node)), time_(time), node_(node) {}

  double time() const { return time_; }
  /// Collocation node / sample index, or kNoNode for a single system.
  std::size_t node() const { return node_; }

 private:
  static std::string make_message(double time, std::size_t node) {
    std::string msg = "non-finite state at t = " + std::to_string(time);
    if (node != kNoNode) msg += " (node " + std::to_string(node) + ")";
    return msg;
  }

  double time_;
  std::size_t node_;
};

class InvalidStart : public Error {
 public:
  using Error::Error;
};

class EmptyEnsemble : public Error {
 public:
  using Error::Error;
};

}  // namespace pcesocp
