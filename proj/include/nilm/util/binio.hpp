#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <vector>

#include "nilm/errors.hpp"

namespace nilm::util {

// Explicit little-endian serialization, independent of host byte order.

inline void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_f32(std::ostream& os, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  write_u32(os, u);
}

inline void write_f64(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  write_u64(os, u);
}

inline std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw DataError("binio: truncated stream while reading u32");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw DataError("binio: truncated stream while reading u64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline float read_f32(std::istream& is) {
  const std::uint32_t u = read_u32(is);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

inline double read_f64(std::istream& is) {
  const std::uint64_t u = read_u64(is);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

inline void write_f32_block(std::ostream& os, const double* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    std::vector<float> buf(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = static_cast<float>(data[i]);
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(n * sizeof(float)));
  } else {
    for (std::size_t i = 0; i < n; ++i) write_f32(os, static_cast<float>(data[i]));
  }
}

inline void read_f32_block(std::istream& is, double* out, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    std::vector<float> buf(n);
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    if (!is) throw DataError("binio: truncated stream while reading f32 block");
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(buf[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(read_f32(is));
  }
}

}  // namespace nilm::util
