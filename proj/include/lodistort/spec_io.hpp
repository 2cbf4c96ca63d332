// Copyright 2026 The lodistort Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "lodistort/atomic_file.hpp"
#include "lodistort/types.hpp"

// LDSPEC1 spectrogram files: the 7-byte magic "LDSPEC1", then little-endian
// u32 T, F, P, then T*F*P (re, im) float64 pairs in t-major, f-middle,
// p-minor order.
namespace lodistort::spec_io {

inline constexpr char kMagic[] = "LDSPEC1";
inline constexpr std::size_t kMagicLen = 7;
inline constexpr std::size_t kHeaderLen = kMagicLen + 3 * sizeof(std::uint32_t);

struct ExpectedShape {
  std::optional<Eigen::Index> frames;
  std::optional<Eigen::Index> bins;
  std::optional<Eigen::Index> channels;
};

inline std::string encode(const Spectrogram& s) {
  std::string out(kMagic, kMagicLen);
  for (Eigen::Index d : {s.frames(), s.bins(), s.channels()}) {
    const auto v = static_cast<std::uint32_t>(d);
    out.append(reinterpret_cast<const char*>(&v), sizeof v);
  }
  const auto& raw = s.raw();
  out.append(reinterpret_cast<const char*>(raw.data()), raw.size() * sizeof(cplx));
  return out;
}

inline void write(const std::filesystem::path& path, const Spectrogram& s) {
  writeFileAtomic(path, encode(s));
}

inline Spectrogram read(const std::filesystem::path& path, const ExpectedShape& expect = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open spectrogram file " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < kHeaderLen || std::memcmp(buf.data(), kMagic, kMagicLen) != 0)
    throw IoError(path.string() + ": not an LDSPEC1 file");

  std::uint32_t dims[3];
  std::memcpy(dims, buf.data() + kMagicLen, sizeof dims);
  const std::size_t count = std::size_t{dims[0]} * dims[1] * dims[2];
  if (buf.size() != kHeaderLen + count * sizeof(cplx))
    throw IoError(path.string() + ": payload size does not match header dims");

  const auto check = [&](const char* name, const std::optional<Eigen::Index>& want,
                         std::uint32_t got) {
    if (want && *want != static_cast<Eigen::Index>(got))
      throw InvalidArgument(path.string() + ": shape mismatch in " + name + ": expected " +
                            std::to_string(*want) + ", found " + std::to_string(got));
  };
  check("T", expect.frames, dims[0]);
  check("F", expect.bins, dims[1]);
  check("P", expect.channels, dims[2]);

  Spectrogram s(dims[0], dims[1], dims[2]);
  std::memcpy(s.raw().data(), buf.data() + kHeaderLen, count * sizeof(cplx));
  if (!s.allFinite()) throw IoError(path.string() + ": non-finite value in spectrogram");
  return s;
}

}  // namespace lodistort::spec_io
