#include "graphreason/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>

#include "graphreason/error.hpp"

namespace graphreason {

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &length,
                 EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::Io, "sha256 digest failed");
  }
  std::string hex(static_cast<std::size_t>(length) * 2, '0');
  static const char* kDigits = "0123456789abcdef";
  for (unsigned int i = 0; i < length; ++i) {
    hex[2 * i] = kDigits[digest[i] >> 4];
    hex[2 * i + 1] = kDigits[digest[i] & 0x0f];
  }
  return hex;
}

}  // namespace graphreason
