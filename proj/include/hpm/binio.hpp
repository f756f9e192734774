#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

// Little-endian primitive IO for the binary snapshot formats, independent of
// host byte order.
namespace hpm::binio {

inline void put_u16(std::ostream& o, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  o.write(b, 2);
}

inline void put_u32(std::ostream& o, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  o.write(b, 4);
}

inline void put_u64(std::ostream& o, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  o.write(b, 8);
}

inline void put_i32(std::ostream& o, std::int32_t v) { put_u32(o, static_cast<std::uint32_t>(v)); }

inline void put_f64(std::ostream& o, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  put_u64(o, u);
}

inline std::uint16_t get_u16(std::istream& i) {
  unsigned char b[2] = {0, 0};
  i.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline std::uint32_t get_u32(std::istream& i) {
  unsigned char b[4] = {0, 0, 0, 0};
  i.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int k = 3; k >= 0; --k) v = (v << 8) | b[k];
  return v;
}

inline std::uint64_t get_u64(std::istream& i) {
  unsigned char b[8] = {};
  i.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | b[k];
  return v;
}

inline std::int32_t get_i32(std::istream& i) { return static_cast<std::int32_t>(get_u32(i)); }

inline double get_f64(std::istream& i) {
  std::uint64_t u = get_u64(i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace hpm::binio
