#pragma once

// Raw I/Q sample files: little-endian interleaved (I, Q) pairs of 32- or 64-bit IEEE floats.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cyclosense/common.hpp"

namespace cyclosense {

enum class SampleFormat { F32, F64 };

inline SampleFormat parse_sample_format(std::string_view s) {
  if (s == "f32") return SampleFormat::F32;
  if (s == "f64") return SampleFormat::F64;
  throw ParameterError("unknown sample format '" + std::string(s) + "' (expected f32 or f64)");
}

inline std::size_t bytes_per_sample(SampleFormat f) { return f == SampleFormat::F32 ? 8 : 16; }

class IqFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
template <class Float, class Bits>
Float load_le(const unsigned char* p) {
  Bits b = 0;
  for (std::size_t i = 0; i < sizeof(Bits); ++i) b |= static_cast<Bits>(p[i]) << (8 * i);
  return std::bit_cast<Float>(b);
}

template <class Float, class Bits>
void store_le(Float x, unsigned char* p) {
  const auto b = std::bit_cast<Bits>(x);
  for (std::size_t i = 0; i < sizeof(Bits); ++i) p[i] = static_cast<unsigned char>(b >> (8 * i));
}
}  // namespace detail

inline std::vector<Sample> decode_iq(std::span<const unsigned char> bytes, SampleFormat fmt) {
  const std::size_t width = bytes_per_sample(fmt);
  if (bytes.size() % width != 0)
    throw IqFileError("truncated I/Q data: " + std::to_string(bytes.size()) + " bytes is not a multiple of " +
                      std::to_string(width));
  std::vector<Sample> out(bytes.size() / width);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const unsigned char* p = bytes.data() + i * width;
    if (fmt == SampleFormat::F32)
      out[i] = {detail::load_le<float, std::uint32_t>(p), detail::load_le<float, std::uint32_t>(p + 4)};
    else
      out[i] = {detail::load_le<double, std::uint64_t>(p), detail::load_le<double, std::uint64_t>(p + 8)};
  }
  return out;
}

inline std::vector<unsigned char> encode_iq(std::span<const Sample> samples, SampleFormat fmt) {
  const std::size_t width = bytes_per_sample(fmt);
  std::vector<unsigned char> out(samples.size() * width);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    unsigned char* p = out.data() + i * width;
    if (fmt == SampleFormat::F32) {
      detail::store_le<float, std::uint32_t>(static_cast<float>(samples[i].real()), p);
      detail::store_le<float, std::uint32_t>(static_cast<float>(samples[i].imag()), p + 4);
    } else {
      detail::store_le<double, std::uint64_t>(samples[i].real(), p);
      detail::store_le<double, std::uint64_t>(samples[i].imag(), p + 8);
    }
  }
  return out;
}

inline std::vector<Sample> read_iq_file(const std::string& path, SampleFormat fmt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IqFileError(path + ": cannot open");
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    return decode_iq(bytes, fmt);
  } catch (const IqFileError& e) {
    throw IqFileError(path + ": " + e.what());
  }
}

inline void write_iq_file(const std::string& path, std::span<const Sample> samples, SampleFormat fmt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IqFileError(path + ": cannot open for writing");
  const auto bytes = encode_iq(samples, fmt);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IqFileError(path + ": write failed");
}

}  // namespace cyclosense
