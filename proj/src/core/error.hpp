#pragma once

#include <stdexcept>
#include <string>

namespace m2oe {

enum class ErrorKind {
  Shape,
  Config,
  Validation,
  Parse,
  Io,
  Format,
  DegenerateMask,
  DegenerateRouting,
  Determinism,
  Divergence,
  NonFinite,
  Internal,
};

inline const char *error_kind_name(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::Shape: return "shape";
  case ErrorKind::Config: return "config";
  case ErrorKind::Validation: return "validation";
  case ErrorKind::Parse: return "parse";
  case ErrorKind::Io: return "io";
  case ErrorKind::Format: return "format";
  case ErrorKind::DegenerateMask: return "degenerate-mask";
  case ErrorKind::DegenerateRouting: return "degenerate-routing";
  case ErrorKind::Determinism: return "determinism";
  case ErrorKind::Divergence: return "divergence";
  case ErrorKind::NonFinite: return "non-finite";
  case ErrorKind::Internal: return "internal";
  }
  return "unknown";
}

class M2oeError : public std::runtime_error {
public:
  M2oeError(ErrorKind kind, const std::string &message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &message) {
  throw M2oeError(kind, message);
}

} // namespace m2oe
