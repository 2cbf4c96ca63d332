// Copyright 2026 The lodistort Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>

#include "lodistort/scene_sim.hpp"
#include "lodistort/spec_io.hpp"
#include "lodistort/stft.hpp"
#include "lodistort/types.hpp"
#include "lodistort/wav.hpp"

// First-stage target estimates. These stand in for a trained network: the
// oracles derive the estimate from the known target, and external estimates
// come from files.
namespace lodistort::estimator {

enum class EstimateKind { oracleDirect, oracleMagMask, oraclePhaseSensitiveMask, corrupted, external };

inline std::string toString(EstimateKind k) {
  switch (k) {
    case EstimateKind::oracleDirect: return "oracleDirect";
    case EstimateKind::oracleMagMask: return "oracleMagMask";
    case EstimateKind::oraclePhaseSensitiveMask: return "oraclePhaseSensitiveMask";
    case EstimateKind::corrupted: return "corrupted";
    case EstimateKind::external: return "external";
  }
  return "unknown";
}

inline EstimateKind kindFromString(const std::string& s) {
  for (auto k : {EstimateKind::oracleDirect, EstimateKind::oracleMagMask,
                 EstimateKind::oraclePhaseSensitiveMask, EstimateKind::corrupted,
                 EstimateKind::external})
    if (toString(k) == s) return k;
  throw InvalidArgument("unknown estimator kind '" + s +
                        "' (valid: oracleDirect, oracleMagMask, oraclePhaseSensitiveMask, "
                        "corrupted, external)");
}

struct TargetEstimate {
  Spectrogram spec;  // [T x F x Pe], Pe in {1, P}
  EstimateKind kind = EstimateKind::oracleDirect;
  int refMic = 0;

  // The estimate at the reference microphone, whichever layout is stored.
  TfMap atRef() const { return spec.channel(spec.channels() == 1 ? 0 : refMic); }
};

namespace detail {

// Real mask in [0, 1] applied to a mixture bin; zero mixture bins give 0.
inline cplx maskedBin(cplx y, cplx s, EstimateKind kind) {
  const double my = std::abs(y);
  if (my == 0.0) return {0.0, 0.0};
  double m = std::abs(s) / my;
  if (kind == EstimateKind::oraclePhaseSensitiveMask) m *= std::cos(std::arg(s) - std::arg(y));
  m = std::clamp(m, 0.0, 1.0);
  return m * y;
}

}  // namespace detail

// Mask oracles are applied per channel, so an estimate has as many channels
// as the target it was derived from.
inline TargetEstimate oracleEstimate(const Spectrogram& mixture, const Spectrogram& target,
                                     EstimateKind kind, int refMic = 0) {
  if (!mixture.sameShape(target))
    throw InvalidArgument("oracleEstimate: mixture " + mixture.shapeString() +
                          " and target " + target.shapeString() + " differ in shape");
  lodistort::detail::require(refMic >= 0 && refMic < mixture.channels(),
                             "oracleEstimate: reference mic out of range");
  TargetEstimate out{target, kind, refMic};
  switch (kind) {
    case EstimateKind::oracleDirect:
      break;
    case EstimateKind::oracleMagMask:
    case EstimateKind::oraclePhaseSensitiveMask:
      for (std::size_t i = 0; i < out.spec.raw().size(); ++i)
        out.spec.raw()[i] = detail::maskedBin(mixture.raw()[i], target.raw()[i], kind);
      break;
    default:
      throw InvalidArgument("oracleEstimate: kind " + toString(kind) + " is not an oracle");
  }
  return out;
}

// Sentinel for "no corruption".
inline constexpr double kNoCorruption = std::numeric_limits<double>::infinity();

// Adds circular complex Gaussian noise at the requested estimate-to-error
// ratio. An infinite ratio returns the input unchanged.
inline TargetEstimate corruptEstimate(const TargetEstimate& clean, double estErrSnrDb,
                                      std::uint64_t seed) {
  lodistort::detail::require(!std::isnan(estErrSnrDb), "corruptEstimate: SNR is NaN");
  if (std::isinf(estErrSnrDb) && estErrSnrDb > 0) return clean;
  lodistort::detail::require(std::isfinite(estErrSnrDb), "corruptEstimate: SNR must be finite or +inf");

  auto rng = scene_sim::streamRng(seed, 0xC0AAull);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<cplx> added(clean.spec.raw().size());
  double addedEnergy = 0.0, cleanEnergy = 0.0;
  for (std::size_t i = 0; i < added.size(); ++i) {
    added[i] = {gauss(rng), gauss(rng)};
    addedEnergy += std::norm(added[i]);
    cleanEnergy += std::norm(clean.spec.raw()[i]);
  }
  TargetEstimate out = clean;
  out.kind = EstimateKind::corrupted;
  if (cleanEnergy == 0.0 || addedEnergy == 0.0) return out;
  const double g = std::sqrt(cleanEnergy / (addedEnergy * std::pow(10.0, estErrSnrDb / 10.0)));
  for (std::size_t i = 0; i < added.size(); ++i) out.spec.raw()[i] += g * added[i];
  return out;
}

// Reads an estimate from an LDSPEC1 file or a WAV file analyzed with cfg.
// Either layout may carry one channel or all mixture channels.
inline TargetEstimate loadExternalEstimate(const std::filesystem::path& path,
                                           Eigen::Index frames, Eigen::Index bins,
                                           Eigen::Index mixtureChannels, int refMic,
                                           const stft::StftConfig& cfg = {}) {
  Spectrogram s;
  const auto ext = path.extension().string();
  if (ext == ".wav" || ext == ".WAV") {
    const TimeSignal sig = wav::read(path);
    s = stft::analyze(sig, cfg);
    if (s.frames() != frames || s.bins() != bins)
      throw InvalidArgument(path.string() + ": shape mismatch: expected T=" + std::to_string(frames) +
                            ", F=" + std::to_string(bins) + ", found " + s.shapeString());
  } else {
    s = spec_io::read(path, {frames, bins, std::nullopt});
  }
  if (s.channels() != 1 && s.channels() != mixtureChannels)
    throw InvalidArgument(path.string() + ": shape mismatch in P: expected 1 or " +
                          std::to_string(mixtureChannels) + ", found " + std::to_string(s.channels()));
  return TargetEstimate{std::move(s), EstimateKind::external, refMic};
}

}  // namespace lodistort::estimator
