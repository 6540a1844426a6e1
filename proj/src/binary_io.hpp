#pragma once

// Little-endian scalar encoding for the on-disk dense index.

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "ragbench/error.hpp"

namespace ragbench::io {

inline void put_bytes_le(std::ostream& out, std::uint64_t v, int n) {
  char buf[8];
  for (int i = 0; i < n; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, n);
}

inline std::uint64_t get_bytes_le(std::istream& in, int n) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), n)) throw DataIntegrityError("truncated binary file");
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

inline void put_u8(std::ostream& out, std::uint8_t v) { put_bytes_le(out, v, 1); }
inline void put_u32(std::ostream& out, std::uint32_t v) { put_bytes_le(out, v, 4); }
inline void put_u64(std::ostream& out, std::uint64_t v) { put_bytes_le(out, v, 8); }
inline void put_f32(std::ostream& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof bits);
  put_u32(out, bits);
}
inline void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint8_t get_u8(std::istream& in) { return static_cast<std::uint8_t>(get_bytes_le(in, 1)); }
inline std::uint32_t get_u32(std::istream& in) { return static_cast<std::uint32_t>(get_bytes_le(in, 4)); }
inline std::uint64_t get_u64(std::istream& in) { return get_bytes_le(in, 8); }
inline float get_f32(std::istream& in) {
  const auto bits = get_u32(in);
  float f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}
inline std::string get_string(std::istream& in) {
  const auto len = get_u32(in);
  std::string s(len, '\0');
  if (len > 0 && !in.read(s.data(), len)) throw DataIntegrityError("truncated string in binary file");
  return s;
}

}  // namespace ragbench::io
