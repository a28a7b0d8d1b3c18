#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace graphreason {

/// Category attached to every error raised by the library. CLI exit codes and
/// episode error records key off this, so new values go at the end.
enum class ErrorKind {
  Io,                  // file missing / unreadable / short read
  Parse,               // malformed record, bad header
  Validation,          // invariant violation in loaded or supplied data
  Dimension,           // mismatched vector/matrix dimensions
  Config,              // invalid run configuration
  Budget,              // prompt budget cannot fit the irreducible parts
  Backend,             // completion backend failed (non-transport)
  Transport,           // HTTP connection/timeout after retries
  ScriptExhausted,     // replay script has no entry for the request
  UnsupportedBackend,  // operation requires a differentiable backend
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace graphreason
