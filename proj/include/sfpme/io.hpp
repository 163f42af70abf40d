#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sfpme/grid.hpp"

namespace sfpme {

/// Shortest text that is byte-stable across runs: "%.17g".
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Joins values with commas and terminates the row with a newline.
inline std::string csv_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out += ',';
    out += cells[i];
  }
  out += '\n';
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw InputError("write to " + path.string() + " failed");
}

/// Header of the binary snapshot format. On disk, little-endian:
///   char[8]  magic "SFPMSNAP"
///   uint32   version (1)
///   uint32   d
///   uint64   n (points per dimension)
///   float64  L, alpha, m, t
///   float64  values[n^d], row-major
struct SnapshotHeader {
  std::uint32_t version = 1;
  std::uint32_t dim = 1;
  std::uint64_t n = 0;
  double side_length = 0.0;
  double alpha = 0.0;
  double m = 0.0;
  double time = 0.0;
};

inline constexpr char kSnapshotMagic[8] = {'S', 'F', 'P', 'M', 'S', 'N', 'A', 'P'};

namespace detail {

template <class T>
void append_le(std::string& buf, T value) {
  static_assert(std::endian::native == std::endian::little ||
                std::endian::native == std::endian::big);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  buf.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T read_le(const std::string& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw InputError("snapshot file is truncated");
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, buf.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  pos += sizeof(T);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace detail

inline std::string encode_snapshot(const Field& f, double alpha, double m) {
  std::string buf(kSnapshotMagic, sizeof kSnapshotMagic);
  detail::append_le<std::uint32_t>(buf, 1);
  detail::append_le<std::uint32_t>(buf, static_cast<std::uint32_t>(f.grid.dim()));
  detail::append_le<std::uint64_t>(buf, f.grid.points_per_dim());
  detail::append_le<double>(buf, f.grid.side_length());
  detail::append_le<double>(buf, alpha);
  detail::append_le<double>(buf, m);
  detail::append_le<double>(buf, f.time);
  for (double v : f.values) detail::append_le<double>(buf, v);
  return buf;
}

struct DecodedSnapshot {
  SnapshotHeader header;
  std::vector<double> values;
};

inline DecodedSnapshot decode_snapshot(const std::string& buf) {
  if (buf.size() < sizeof kSnapshotMagic ||
      std::memcmp(buf.data(), kSnapshotMagic, sizeof kSnapshotMagic) != 0) {
    throw InputError("not a snapshot file (bad magic)");
  }
  std::size_t pos = sizeof kSnapshotMagic;
  DecodedSnapshot s;
  s.header.version = detail::read_le<std::uint32_t>(buf, pos);
  if (s.header.version != 1) throw InputError("unsupported snapshot version");
  s.header.dim = detail::read_le<std::uint32_t>(buf, pos);
  s.header.n = detail::read_le<std::uint64_t>(buf, pos);
  s.header.side_length = detail::read_le<double>(buf, pos);
  s.header.alpha = detail::read_le<double>(buf, pos);
  s.header.m = detail::read_le<double>(buf, pos);
  s.header.time = detail::read_le<double>(buf, pos);
  const std::uint64_t count = s.header.dim == 1 ? s.header.n : s.header.n * s.header.n;
  s.values.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) s.values.push_back(detail::read_le<double>(buf, pos));
  if (pos != buf.size()) throw InputError("snapshot file has trailing bytes");
  return s;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace sfpme
