#include "litmine/binary_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "litmine/error.hpp"

namespace litmine {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::unavailable: return "unavailable";
    case ErrorCode::data_error: return "data_error";
  }
  return "unknown";
}

}  // namespace litmine

namespace litmine::io {
namespace {

template <typename U>
void put_le(std::ostream& out, U v) {
  std::array<char, sizeof(U)> buf{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  }
  out.write(buf.data(), buf.size());
}

template <typename U>
U get_le(std::istream& in, std::string_view what) {
  std::array<unsigned char, sizeof(U)> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw Error(ErrorCode::data_error, fmt::format("truncated file while reading {}", what));
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(buf[i]) << (8 * i);
  }
  return v;
}

constexpr std::string_view kAlphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

}  // namespace

void write_u32(std::ostream& out, std::uint32_t v) { put_le(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { put_le(out, v); }
void write_i64(std::ostream& out, std::int64_t v) {
  put_le(out, static_cast<std::uint64_t>(v));
}
void write_f32(std::ostream& out, float v) {
  put_le(out, std::bit_cast<std::uint32_t>(v));
}
void write_f32s(std::ostream& out, std::span<const float> values) {
  for (float v : values) write_f32(out, v);
}
void write_bytes(std::ostream& out, std::string_view bytes) {
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::uint32_t read_u32(std::istream& in, std::string_view what) {
  return get_le<std::uint32_t>(in, what);
}
std::uint64_t read_u64(std::istream& in, std::string_view what) {
  return get_le<std::uint64_t>(in, what);
}
std::int64_t read_i64(std::istream& in, std::string_view what) {
  return static_cast<std::int64_t>(get_le<std::uint64_t>(in, what));
}
void read_f32s(std::istream& in, std::span<float> out, std::string_view what) {
  for (float& v : out) v = std::bit_cast<float>(get_le<std::uint32_t>(in, what));
}
std::string read_bytes(std::istream& in, std::size_t n, std::string_view what) {
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) {
    throw Error(ErrorCode::data_error, fmt::format("truncated file while reading {}", what));
  }
  return s;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t n = bytes[i] << 16;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::vector<std::uint8_t> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=') break;
    const auto pos = kAlphabet.find(c);
    if (pos == std::string_view::npos) {
      throw Error(ErrorCode::data_error, "invalid base64 character");
    }
    acc = (acc << 6) | static_cast<std::uint32_t>(pos);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
    }
  }
  return out;
}

std::string encode_f32_base64(std::span<const float> values) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(values.size() * 4);
  for (float v : values) {
    const auto u = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
  }
  return base64_encode(bytes);
}

std::vector<float> decode_f32_base64(std::string_view text) {
  const auto bytes = base64_decode(text);
  if (bytes.size() % 4 != 0) {
    throw Error(ErrorCode::data_error, "float array byte length not a multiple of 4");
  }
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
    out[i] = std::bit_cast<float>(u);
  }
  return out;
}

}  // namespace litmine::io
