#pragma once

// Little-endian primitives shared by the embedding store and index formats.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace litmine::io {

void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_i64(std::ostream& out, std::int64_t v);
void write_f32(std::ostream& out, float v);
void write_f32s(std::ostream& out, std::span<const float> values);
void write_bytes(std::ostream& out, std::string_view bytes);

/// Readers throw Error(data_error) naming `what` on truncation.
std::uint32_t read_u32(std::istream& in, std::string_view what);
std::uint64_t read_u64(std::istream& in, std::string_view what);
std::int64_t read_i64(std::istream& in, std::string_view what);
void read_f32s(std::istream& in, std::span<float> out, std::string_view what);
std::string read_bytes(std::istream& in, std::size_t n, std::string_view what);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// float32 array <-> base64 of little-endian bytes.
std::string encode_f32_base64(std::span<const float> values);
std::vector<float> decode_f32_base64(std::string_view text);

}  // namespace litmine::io
