#pragma once
// Little-endian binary IO helpers, FNV hashing, and the fixed float
// formatting used by every text format we emit ("%.9g" round-trips float32
// exactly, so text artifacts are byte-stable across runs).

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "zsmstm/errors.hpp"

namespace zsmstm {

// ---- little-endian primitives -------------------------------------------

inline void write_u8(std::ostream& os, uint8_t v) { os.put(char(v)); }

inline void write_u32(std::ostream& os, uint32_t v) {
  char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff), char((v >> 24) & 0xff)};
  os.write(b, 4);
}

inline void write_u64(std::ostream& os, uint64_t v) {
  write_u32(os, uint32_t(v & 0xffffffffULL));
  write_u32(os, uint32_t(v >> 32));
}

inline void write_f32(std::ostream& os, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32(os, bits);
}

inline void write_f64(std::ostream& os, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(os, bits);
}

inline uint8_t read_u8(std::istream& is) {
  int c = is.get();
  check(c != EOF, Err::io_error, "unexpected end of file");
  return uint8_t(c);
}

inline uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  check(bool(is), Err::io_error, "unexpected end of file");
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

inline uint64_t read_u64(std::istream& is) {
  uint64_t lo = read_u32(is);
  uint64_t hi = read_u32(is);
  return lo | (hi << 32);
}

inline float read_f32(std::istream& is) {
  uint32_t bits = read_u32(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

inline double read_f64(std::istream& is) {
  uint64_t bits = read_u64(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline void write_str(std::ostream& os, const std::string& s) {
  write_u32(os, uint32_t(s.size()));
  os.write(s.data(), std::streamsize(s.size()));
}

inline std::string read_str(std::istream& is) {
  uint32_t n = read_u32(is);
  check(n <= (1u << 20), Err::io_error, "string length out of range");
  std::string s(n, '\0');
  is.read(s.data(), n);
  check(bool(is), Err::io_error, "unexpected end of file");
  return s;
}

// ---- files ----------------------------------------------------------------

inline std::ifstream open_input(const std::filesystem::path& p, bool binary = true) {
  check(std::filesystem::exists(p), Err::missing_file, p.string());
  std::ifstream f(p, binary ? std::ios::binary : std::ios::in);
  check(f.is_open(), Err::io_error, "cannot open " + p.string());
  return f;
}

inline std::ofstream open_output(const std::filesystem::path& p, bool binary = true) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, binary ? std::ios::binary : std::ios::out);
  check(f.is_open(), Err::io_error, "cannot open " + p.string() + " for writing");
  return f;
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& p) {
  auto f = open_input(p);
  f.seekg(0, std::ios::end);
  std::vector<unsigned char> buf(size_t(f.tellg()));
  f.seekg(0);
  f.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
  check(bool(f), Err::io_error, "short read on " + p.string());
  return buf;
}

// ---- hashing ----------------------------------------------------------------

inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t fnv1a64_file(const std::filesystem::path& p) {
  auto bytes = read_file_bytes(p);
  return fnv1a64(bytes.data(), bytes.size());
}

inline std::string hex64(uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---- text formatting ----------------------------------------------------------

// %.9g preserves every float32 exactly and keeps text files compact.
inline std::string fmt_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// fixed 6 decimals, for keypoint JSON where a flat layout is expected
inline std::string fmt_f6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// %.17g: lossless for float64 (normalization stats)
inline std::string fmt_g17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace zsmstm
