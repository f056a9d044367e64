#pragma once

#include <array>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "stretchbot/error.hpp"

namespace stretchbot {

/// Lowercase hex SHA-256 of `data`.
inline std::string sha256Hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw StretchbotError(ErrorCode::kInvalidConfig, "SHA-256 unavailable");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xF];
  }
  return out;
}

}  // namespace stretchbot
