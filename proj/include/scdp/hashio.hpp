#pragma once

// Content hashing for artifact provenance (FNV-1a 64) and little-endian
// binary file helpers shared by the dataset and checkpoint formats.

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace scdp {

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[h & 0xf];
    h >>= 4;
  }
  return s;
}

inline std::string content_hash(const std::string& bytes) {
  return hash_hex(fnv1a64(bytes.data(), bytes.size()));
}

inline std::string file_hash(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for hashing: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (f) {
    f.read(buf, sizeof(buf));
    h = fnv1a64(buf, static_cast<std::size_t>(f.gcount()), h);
  }
  return hash_hex(h);
}

inline void write_f32_le(std::ostream& os, const std::vector<double>& v) {
  for (double x : v) {
    const float f = static_cast<float>(x);
    os.write(reinterpret_cast<const char*>(&f), 4);
  }
}

inline std::vector<double> read_f32_le(std::istream& is, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    float f;
    is.read(reinterpret_cast<char*>(&f), 4);
    if (!is) {
      throw std::runtime_error("truncated float32 blob at element " +
                               std::to_string(i));
    }
    v[i] = static_cast<double>(f);
  }
  return v;
}

}  // namespace scdp
