#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "chantseg/errors.hpp"

namespace chantseg::io {

// Little helpers for the versioned binary model formats. Values are written
// in host byte order; files are not meant to move between architectures.
template <typename T>
void write_pod(std::ostream& os, const T& value) {
  static_assert(std::is_trivially_copyable_v<T>);
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  static_assert(std::is_trivially_copyable_v<T>);
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw FormatError("unexpected end of binary stream");
  return value;
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_pod<std::uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
  const auto n = read_pod<std::uint64_t>(is);
  if (n > (1ULL << 32)) throw FormatError("string length out of range");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw FormatError("unexpected end of binary stream");
  return s;
}

inline void write_magic(std::ostream& os, const char (&magic)[5], std::uint32_t version) {
  os.write(magic, 4);
  write_pod(os, version);
}

inline void expect_magic(std::istream& is, const char (&magic)[5], std::uint32_t version) {
  char buf[4];
  is.read(buf, 4);
  if (!is || std::string(buf, 4) != std::string(magic, 4))
    throw FormatError(std::string("bad magic, expected ") + magic);
  const auto v = read_pod<std::uint32_t>(is);
  if (v != version)
    throw FormatError(std::string(magic) + ": unsupported version " + std::to_string(v));
}

}  // namespace chantseg::io
