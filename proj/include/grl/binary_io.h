#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "grl/errors.h"

// Little-endian primitives shared by the snapshot cache and checkpoints.
namespace grl::binary {

template <typename U>
void write_uint(std::ostream& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.put(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

inline void write_f64(std::ostream& out, double v) {
  write_uint(out, std::bit_cast<std::uint64_t>(v));
}

template <typename U>
U read_uint(std::istream& in, const std::string& what) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) {
      throw InputError("truncated file while reading " + what);
    }
    v |= static_cast<U>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

inline double read_f64(std::istream& in, const std::string& what) {
  return std::bit_cast<double>(read_uint<std::uint64_t>(in, what));
}

inline void expect_magic(std::istream& in, const char (&magic)[5],
                         const std::string& kind) {
  char buf[4] = {};
  in.read(buf, 4);
  if (in.gcount() != 4 || std::string(buf, 4) != std::string(magic, 4)) {
    throw InputError("not a " + kind + " file (bad magic)");
  }
}

// FNV-1a, used as the integrity trailer of checkpoints.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace grl::binary
