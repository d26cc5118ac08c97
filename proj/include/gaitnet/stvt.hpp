#pragma once

// STVT raw tensor files, all integers little-endian:
//
//   offset  size       field
//   0       4          magic "STVT"
//   4       4          version (u32) = 1
//   8       4          ndim (u32), >= 1
//   12      8 * ndim   extents (u64 each), >= 1
//   ...     1          dtype: 1 = float32, 2 = float64
//   ...     numel * w  row-major payload, IEEE-754 little-endian

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "gaitnet/tensor.hpp"

namespace gaitnet {

inline constexpr std::uint32_t kStvtVersion = 1;
inline constexpr std::uint8_t kStvtFloat32 = 1;
inline constexpr std::uint8_t kStvtFloat64 = 2;

template <typename T>
std::string encode_stvt(const BasicTensor<T>& tensor);

// Decodes one tensor starting at `bytes[pos]` and advances `pos` past it.
// A float32 file read as double (or vice versa) is converted. Errors carry
// the byte offset relative to `base_offset + pos`.
template <typename T>
BasicTensor<T> decode_stvt(std::string_view bytes, std::size_t& pos, std::uint64_t base_offset = 0);

// dtype byte of an encoded tensor, without decoding the payload.
std::uint8_t stvt_dtype(std::string_view bytes);

template <typename T>
void write_raw_tensor(const std::filesystem::path& path, const BasicTensor<T>& tensor);

// Reads a whole file; trailing bytes after the payload are a format error.
template <typename T>
BasicTensor<T> read_raw_tensor(const std::filesystem::path& path);

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace gaitnet
