#pragma once

#include <stdexcept>
#include <string>

namespace mando {

enum class ErrorCode {
  Ok = 0,
  Io,
  DuplicateNode,
  DuplicateEdge,
  UnknownEndpoint,
  MissingEntryPoint,
  LexError,
  ParseError,
  SchemaError,
  UnknownMetapath,
  TooManyTypes,
  UnknownType,
  NoNeighbors,
  StratumTooSmall,
  LengthMismatch,
  ConfigError,
  CatalogMismatch,
};

const char* error_code_name(ErrorCode code);

/// The one exception type the library throws. Carries a stable code so the
/// C boundary can map it to an integer without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace mando
