// Copyright 2026 The lodistort Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lodistort/atomic_file.hpp"
#include "lodistort/types.hpp"

// Minimal RIFF/WAVE reader and writer: PCM 16-bit and IEEE float 32-bit,
// any channel count. Little-endian hosts only.
namespace lodistort::wav {

static_assert(std::endian::native == std::endian::little,
              "wav I/O assumes a little-endian host");

enum class Encoding { pcm16, float32 };

namespace detail {

inline constexpr std::uint16_t kFormatPcm = 1;
inline constexpr std::uint16_t kFormatFloat = 3;
inline constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T readLe(const std::vector<char>& buf, std::size_t off) {
  T v{};
  std::memcpy(&v, buf.data() + off, sizeof(T));
  return v;
}

template <typename T>
void appendLe(std::string& out, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  out.append(bytes, sizeof(T));
}

}  // namespace detail

inline TimeSignal read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV file " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto fail = [&](const std::string& why) {
    return IoError("malformed WAV file " + path.string() + ": " + why);
  };
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw fail("missing RIFF/WAVE header");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool haveFmt = false;
  std::size_t dataOff = 0, dataLen = 0;
  std::size_t off = 12;
  while (off + 8 <= buf.size()) {
    const std::string id(buf.data() + off, 4);
    const auto len = detail::readLe<std::uint32_t>(buf, off + 4);
    const std::size_t body = off + 8;
    if (body + len > buf.size() && id != "data") throw fail("truncated chunk " + id);
    if (id == "fmt ") {
      if (len < 16) throw fail("short fmt chunk");
      format = detail::readLe<std::uint16_t>(buf, body);
      channels = detail::readLe<std::uint16_t>(buf, body + 2);
      rate = detail::readLe<std::uint32_t>(buf, body + 4);
      bits = detail::readLe<std::uint16_t>(buf, body + 14);
      if (format == detail::kFormatExtensible && len >= 26)
        format = detail::readLe<std::uint16_t>(buf, body + 24);
      haveFmt = true;
    } else if (id == "data") {
      dataOff = body;
      dataLen = std::min<std::size_t>(len, buf.size() - body);
      break;
    }
    off = body + len + (len & 1u);
  }
  if (!haveFmt) throw fail("no fmt chunk");
  if (dataOff == 0) throw fail("no data chunk");
  if (channels == 0) throw fail("zero channels");

  std::size_t width = 0;
  if (format == detail::kFormatPcm && bits == 16)
    width = 2;
  else if (format == detail::kFormatFloat && bits == 32)
    width = 4;
  else
    throw IoError("unsupported WAV encoding in " + path.string() + " (format " +
                  std::to_string(format) + ", " + std::to_string(bits) +
                  " bits); expected PCM16 or float32");

  const std::size_t frames = dataLen / (width * channels);
  TimeSignal sig{Eigen::MatrixXd(frames, channels), static_cast<int>(rate)};
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t at = dataOff + (i * channels + c) * width;
      sig.samples(i, c) = width == 2
                              ? detail::readLe<std::int16_t>(buf, at) / 32768.0
                              : static_cast<double>(detail::readLe<float>(buf, at));
    }
  }
  if (!sig.samples.allFinite()) throw IoError("non-finite sample in " + path.string());
  return sig;
}

inline std::string encode(const TimeSignal& sig, Encoding enc = Encoding::float32) {
  const auto channels = static_cast<std::uint16_t>(sig.numChannels());
  const std::uint16_t bits = enc == Encoding::pcm16 ? 16 : 32;
  const std::uint16_t blockAlign = channels * bits / 8;
  const auto dataLen = static_cast<std::uint32_t>(sig.numSamples() * blockAlign);

  std::string out;
  out.reserve(44 + dataLen);
  out += "RIFF";
  detail::appendLe<std::uint32_t>(out, 36 + dataLen);
  out += "WAVEfmt ";
  detail::appendLe<std::uint32_t>(out, 16);
  detail::appendLe<std::uint16_t>(out, enc == Encoding::pcm16 ? detail::kFormatPcm
                                                              : detail::kFormatFloat);
  detail::appendLe<std::uint16_t>(out, channels);
  detail::appendLe<std::uint32_t>(out, static_cast<std::uint32_t>(sig.sampleRateHz));
  detail::appendLe<std::uint32_t>(out, static_cast<std::uint32_t>(sig.sampleRateHz) * blockAlign);
  detail::appendLe<std::uint16_t>(out, blockAlign);
  detail::appendLe<std::uint16_t>(out, bits);
  out += "data";
  detail::appendLe<std::uint32_t>(out, dataLen);
  for (Eigen::Index i = 0; i < sig.numSamples(); ++i) {
    for (Eigen::Index c = 0; c < sig.numChannels(); ++c) {
      const double v = sig.samples(i, c);
      if (enc == Encoding::pcm16) {
        const double scaled = std::round(std::clamp(v, -1.0, 32767.0 / 32768.0) * 32768.0);
        detail::appendLe<std::int16_t>(out, static_cast<std::int16_t>(scaled));
      } else {
        detail::appendLe<float>(out, static_cast<float>(v));
      }
    }
  }
  return out;
}

inline void write(const std::filesystem::path& path, const TimeSignal& sig,
                  Encoding enc = Encoding::float32) {
  sig.validate();
  writeFileAtomic(path, encode(sig, enc));
}

}  // namespace lodistort::wav
