#pragma once

#include <string>
#include <utility>
#include <variant>

namespace alphacl {

enum class Errc {
  kShapeMismatch,
  kDomain,        // argument outside a function's domain (e.g. log of <= 0)
  kOverflow,      // would produce inf (e.g. exp of a huge argument)
  kSingular,      // degenerate input (zero-norm vector into a normalizer)
  kNoConvergence, // iterative method exhausted its budget
  kUnsupported,   // operation not defined for this configuration
  kInvalidConfig, // config value violates a contract
  kIo,            // file read/write failure
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::kShapeMismatch: return "shape_mismatch";
    case Errc::kDomain: return "domain";
    case Errc::kOverflow: return "overflow";
    case Errc::kSingular: return "singular";
    case Errc::kNoConvergence: return "no_convergence";
    case Errc::kUnsupported: return "unsupported";
    case Errc::kInvalidConfig: return "invalid_config";
    case Errc::kIo: return "io";
  }
  return "unknown";
}

struct Error {
  Errc code;
  std::string message;
};

// Minimal value-or-error type. Operations in this library report failure
// through Result rather than exceptions.
template <typename T>
class Result {
 public:
  Result(T value) : v_(std::move(value)) {}  // NOLINT: implicit by design
  Result(Error err) : v_(std::move(err)) {}  // NOLINT

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  T& value() & { return std::get<T>(v_); }
  const T& value() const& { return std::get<T>(v_); }
  T&& value() && { return std::get<T>(std::move(v_)); }
  const Error& error() const { return std::get<Error>(v_); }

  T& operator*() & { return value(); }
  const T& operator*() const& { return value(); }
  T* operator->() { return &value(); }
  const T* operator->() const { return &value(); }

 private:
  std::variant<T, Error> v_;
};

struct Unit {};
using Status = Result<Unit>;

inline Status ok_status() { return Status(Unit{}); }

// Propagate an Error out of a Result-returning function.
#define ALPHACL_TRY_ASSIGN(lhs, expr)              \
  auto lhs##_res = (expr);                         \
  if (!lhs##_res.ok()) return lhs##_res.error();   \
  auto& lhs = *lhs##_res

}  // namespace alphacl
