#include "mando/error.hpp"

namespace mando {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Ok:
      return "Ok";
    case ErrorCode::Io:
      return "Io";
    case ErrorCode::DuplicateNode:
      return "DuplicateNode";
    case ErrorCode::DuplicateEdge:
      return "DuplicateEdge";
    case ErrorCode::UnknownEndpoint:
      return "UnknownEndpoint";
    case ErrorCode::MissingEntryPoint:
      return "MissingEntryPoint";
    case ErrorCode::LexError:
      return "LexError";
    case ErrorCode::ParseError:
      return "ParseError";
    case ErrorCode::SchemaError:
      return "SchemaError";
    case ErrorCode::UnknownMetapath:
      return "UnknownMetapath";
    case ErrorCode::TooManyTypes:
      return "TooManyTypes";
    case ErrorCode::UnknownType:
      return "UnknownType";
    case ErrorCode::NoNeighbors:
      return "NoNeighbors";
    case ErrorCode::StratumTooSmall:
      return "StratumTooSmall";
    case ErrorCode::LengthMismatch:
      return "LengthMismatch";
    case ErrorCode::ConfigError:
      return "ConfigError";
    case ErrorCode::CatalogMismatch:
      return "CatalogMismatch";
  }
  return "Unknown";
}

}  // namespace mando
