#include "graphreason/error.hpp"

namespace graphreason {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Config: return "config";
    case ErrorKind::Budget: return "budget";
    case ErrorKind::Backend: return "backend";
    case ErrorKind::Transport: return "transport";
    case ErrorKind::ScriptExhausted: return "script_exhausted";
    case ErrorKind::UnsupportedBackend: return "unsupported_backend";
  }
  return "unknown";
}

}  // namespace graphreason
