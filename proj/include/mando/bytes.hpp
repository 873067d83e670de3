#pragma once

#include <bit>
#include <cstdint>
#include <string>

#include "mando/error.hpp"

// Little-endian byte packing for the binary file formats. All multi-byte
// values are written byte by byte so the formats are portable across hosts.
namespace mando::bytes {

inline void append_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

inline void append_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

inline void append_f32(std::string& out, float v) {
  append_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline void need(const std::string& s, std::size_t at, std::size_t count) {
  if (at + count > s.size()) raise(ErrorCode::SchemaError, "truncated input");
}

inline std::uint32_t take_u32(const std::string& s, std::size_t& at) {
  need(s, at, 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + i]))
         << (8 * i);
  at += 4;
  return v;
}

inline std::uint64_t take_u64(const std::string& s, std::size_t& at) {
  need(s, at, 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[at + i]))
         << (8 * i);
  at += 8;
  return v;
}

inline float take_f32(const std::string& s, std::size_t& at) {
  return std::bit_cast<float>(take_u32(s, at));
}

inline std::string take_str(const std::string& s, std::size_t& at,
                            std::size_t len) {
  need(s, at, len);
  std::string v = s.substr(at, len);
  at += len;
  return v;
}

}  // namespace mando::bytes
