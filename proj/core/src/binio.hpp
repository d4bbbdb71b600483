#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "ov/errors.hpp"

// Little-endian binary stream helpers shared by the checkpoint, mesh, and
// wire-protocol writers.
namespace ov::binio {

static_assert(std::endian::native == std::endian::little,
              "big-endian hosts need byte swaps here");

template <typename T>
inline void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
inline void write(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
inline T read(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("unexpected end of stream");
  return v;
}

template <typename T>
inline T get(const std::string& buf, std::size_t& off) {
  if (off + sizeof(T) > buf.size()) throw ProtocolError("frame truncated");
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace ov::binio
