#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lattice/error.hpp"

// Little-endian primitives shared by the binary file formats.
namespace lattice::binio {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b, 8);
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b, 4);
}

inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline void put_f64s(std::ostream& out, std::span<const double> values) {
  for (double v : values) put_f64(out, v);
}

inline void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void read_exact(std::istream& in, char* dst, std::size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) throw FormatError("unexpected end of binary data");
}

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  read_exact(in, reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  read_exact(in, reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

inline void get_f64s(std::istream& in, std::span<double> values) {
  for (double& v : values) v = get_f64(in);
}

inline std::string get_string(std::istream& in, std::size_t max_len = 1u << 20) {
  const std::uint32_t n = get_u32(in);
  if (n > max_len) throw FormatError("string length " + std::to_string(n) + " exceeds limit");
  std::string s(n, '\0');
  read_exact(in, s.data(), n);
  return s;
}

inline void put_magic(std::ostream& out, const char (&magic)[9]) { out.write(magic, 8); }

inline void expect_magic(std::istream& in, const char (&magic)[9], const char* what) {
  char got[8];
  read_exact(in, got, 8);
  if (std::string(got, 8) != std::string(magic, 8)) {
    throw FormatError(std::string("not a ") + what + " file (bad magic)");
  }
}

}  // namespace lattice::binio
