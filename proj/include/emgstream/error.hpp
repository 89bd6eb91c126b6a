#pragma once

#include <stdexcept>
#include <string>

namespace emgstream {

enum class ErrorKind {
  Io,
  Parse,
  Schema,
  Mapping,
  Config,
  Shape,
  Numeric,
  Alignment,
  InvalidArg,
};

/// Exception carrying a machine-readable kind alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Mapping: return "mapping";
    case ErrorKind::Config: return "config";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Alignment: return "alignment";
    case ErrorKind::InvalidArg: return "invalid_arg";
  }
  return "unknown";
}

}  // namespace emgstream
