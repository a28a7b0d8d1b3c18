#pragma once

#include <string>
#include <string_view>

namespace graphreason {

/// SHA-256 of the bytes, lowercase hex.
std::string sha256_hex(std::string_view data);

}  // namespace graphreason
