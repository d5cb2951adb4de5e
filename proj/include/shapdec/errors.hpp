#pragma once

#include <stdexcept>
#include <string>

namespace shapdec {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside its admissible size range (feature count, budgets).
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Feature index outside {0..M-1} or not present where required.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// A covariance block stayed unsolvable after the bounded jitter schedule.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Conditioning event has no support (discrete samplers).
class ConditioningError : public Error {
 public:
  using Error::Error;
};

/// Copula marginal without spread cannot produce Gaussian scores.
class DegenerateMarginalError : public Error {
 public:
  using Error::Error;
};

/// External model process failed or answered out of protocol.
class BridgeError : public Error {
 public:
  BridgeError(const std::string& what, std::string diagnostics)
      : Error(diagnostics.empty() ? what : what + " [stderr: " + diagnostics + "]"),
        diagnostics_(std::move(diagnostics)) {}
  explicit BridgeError(const std::string& what) : Error(what) {}

  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string diagnostics_;
};

/// Malformed or inconsistent input data (CSV, JSON, labels).
class IngestionError : public Error {
 public:
  using Error::Error;
};

/// Least squares with no more rows than unknowns.
class UnderdeterminedError : public Error {
 public:
  using Error::Error;
};

/// Exact oracle asked to condition on a zero-probability event.
class OracleError : public Error {
 public:
  using Error::Error;
};

/// Operation not available for the given sampler or model kind.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values reached a renderer.
class RenderError : public Error {
 public:
  using Error::Error;
};

namespace detail {

template <typename E, typename... Rest>
[[noreturn]] void rethrow_as(const Error& e, const std::string& what) {
  if (dynamic_cast<const E*>(&e) != nullptr) throw E(what);
  if constexpr (sizeof...(Rest) > 0) rethrow_as<Rest...>(e, what);
  throw Error(what);
}

}  // namespace detail

/// Rethrows `e` as the same error class with "context: " prepended.
[[noreturn]] inline void rethrow_with_context(const Error& e, const std::string& context) {
  const std::string what = context + ": " + e.what();
  detail::rethrow_as<SizeError, IndexError, SingularityError, ConditioningError, DegenerateMarginalError,
                     BridgeError, IngestionError, UnderdeterminedError, OracleError, UnsupportedError, RenderError>(
      e, what);
}

}  // namespace shapdec
