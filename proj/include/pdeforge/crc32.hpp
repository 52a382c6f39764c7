// Copyright 2026 The pdeforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <zlib.h>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <vector>

#include "pdeforge/error.hpp"

namespace pdeforge {

/// Incremental CRC-32 (IEEE 802.3 polynomial, reflected), backed by zlib.
class Crc32 {
 public:
  void update(std::span<const std::byte> bytes) noexcept {
    constexpr std::size_t kChunk = std::numeric_limits<uInt>::max();
    while (!bytes.empty()) {
      const std::size_t len = std::min(bytes.size(), kChunk);
      crc_ = ::crc32(crc_, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(len));
      bytes = bytes.subspan(len);
    }
  }
  std::uint32_t value() const noexcept { return static_cast<std::uint32_t>(crc_); }

 private:
  uLong crc_ = ::crc32(0L, Z_NULL, 0);
};

inline std::uint32_t crc32_of(std::span<const std::byte> bytes) noexcept {
  Crc32 c;
  c.update(bytes);
  return c.value();
}

/// CRC-32 of a whole file, streamed in 1 MiB blocks.
inline std::uint32_t crc32_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Crc32 c;
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got == 0) break;
    c.update(std::as_bytes(std::span<const char>(buf.data(), got)));
  }
  if (in.bad()) throw IoError("read failed: " + path.string());
  return c.value();
}

}  // namespace pdeforge
