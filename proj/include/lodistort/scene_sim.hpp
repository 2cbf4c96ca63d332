// Copyright 2026 The lodistort Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "lodistort/types.hpp"

// Desk-scale synthetic scenes. Room responses are a stochastic tapped delay
// line: a unit direct tap followed by a Gaussian tail with an exponential
// 60 dB-per-T60 envelope.
namespace lodistort::scene_sim {

struct RoomSpec {
  int numMics = 1;
  double t60Seconds = 0.0;
  int rirLenSamples = 1;
  std::vector<int> directDelaySamples{0};  // one per mic
  std::uint64_t seed = 0;
  int sampleRateHz = 16000;
  // Standard deviation of the tail at zero lag relative to the direct tap.
  double tailScale = 0.05;

  void validate() const {
    detail::require(numMics >= 1, "RoomSpec: numMics must be positive");
    detail::require(t60Seconds >= 0.0, "RoomSpec: t60 must be nonnegative");
    detail::require(static_cast<int>(directDelaySamples.size()) == numMics,
                    "RoomSpec: need one direct delay per mic");
    for (int d : directDelaySamples) {
      detail::require(d >= 0, "RoomSpec: direct delays must be nonnegative");
      detail::require(rirLenSamples >= d + 1, "RoomSpec: rirLenSamples too short for direct delay");
    }
  }
};

struct Scene {
  TimeSignal mixture;         // Y
  TimeSignal directPath;      // S
  TimeSignal reverbResidual;  // H
  TimeSignal noise;           // N
  double snrDb = 0.0;
  int refMic = 0;
};

// Envelope of the tail relative to the direct tap, tau seconds after it.
inline double rirEnvelope(double tauSeconds, double t60Seconds) {
  if (t60Seconds <= 0.0) return tauSeconds == 0.0 ? 1.0 : 0.0;
  return std::exp(-3.0 * std::log(10.0) * tauSeconds / t60Seconds);
}

// Per-(seed, stream) generator; streams keep mics and noise sources
// independent yet reproducible.
inline std::mt19937_64 streamRng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

inline Eigen::VectorXd generateRir(const RoomSpec& room, int micIndex, std::uint64_t stream = 0) {
  room.validate();
  if (micIndex < 0 || micIndex >= room.numMics)
    throw InvalidArgument("generateRir: mic index " + std::to_string(micIndex) +
                          " out of range for " + std::to_string(room.numMics) + " mics");
  Eigen::VectorXd h = Eigen::VectorXd::Zero(room.rirLenSamples);
  const int direct = room.directDelaySamples[micIndex];
  h(direct) = 1.0;
  if (room.t60Seconds <= 0.0) return h;

  auto rng = streamRng(room.seed, (stream << 8) + static_cast<std::uint64_t>(micIndex));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = direct + 1; i < room.rirLenSamples; ++i) {
    const double tau = static_cast<double>(i - direct) / room.sampleRateHz;
    h(i) = room.tailScale * rirEnvelope(tau, room.t60Seconds) * gauss(rng);
  }
  return h;
}

// Linear convolution truncated to the length of x.
inline Eigen::VectorXd convolve(const Eigen::VectorXd& x, const Eigen::VectorXd& h) {
  const Eigen::Index n = x.size();
  const Eigen::Index full = n + h.size() - 1;
  Eigen::Index nfft = 1;
  while (nfft < full) nfft <<= 1;
  std::vector<double> xa(static_cast<std::size_t>(nfft), 0.0), ha(static_cast<std::size_t>(nfft), 0.0);
  std::copy(x.data(), x.data() + n, xa.begin());
  std::copy(h.data(), h.data() + h.size(), ha.begin());
  Eigen::FFT<double> fft;
  std::vector<cplx> xf, hf;
  fft.fwd(xf, xa);
  fft.fwd(hf, ha);
  for (std::size_t i = 0; i < xf.size(); ++i) xf[i] *= hf[i];
  std::vector<double> y;
  fft.inv(y, xf);
  return Eigen::Map<Eigen::VectorXd>(y.data(), n);
}

// Nonstationary speech-like source: syllable bursts of AR-coloured noise
// and harmonic voicing separated by short pauses.
inline TimeSignal syntheticSource(double seconds, std::uint64_t seed, int sampleRateHz = 16000) {
  const auto n = static_cast<Eigen::Index>(std::llround(seconds * sampleRateHz));
  detail::require(n >= 1, "syntheticSource: duration too short");
  auto rng = streamRng(seed, 0xA11CEull);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::Index pos = static_cast<Eigen::Index>(0.05 * sampleRateHz * uni(rng));
  while (pos < n) {
    const auto len = static_cast<Eigen::Index>((0.08 + 0.22 * uni(rng)) * sampleRateHz);
    const auto gap = static_cast<Eigen::Index>((0.02 + 0.12 * uni(rng)) * sampleRateHz);
    const double f0 = 90.0 + 160.0 * uni(rng);
    const double gain = std::pow(10.0, (-12.0 + 12.0 * uni(rng)) / 20.0);
    const bool voiced = uni(rng) < 0.7;
    // Random two-pole resonance as a crude formant.
    const double radius = 0.85 + 0.12 * uni(rng);
    const double centre = 2.0 * kPi * (300.0 + 2500.0 * uni(rng)) / sampleRateHz;
    const double a1 = 2.0 * radius * std::cos(centre), a2 = -radius * radius;
    double y1 = 0.0, y2 = 0.0, phase = 0.0;
    for (Eigen::Index i = 0; i < len && pos + i < n; ++i) {
      const double env = std::sin(kPi * static_cast<double>(i) / static_cast<double>(len));
      double excitation = gauss(rng);
      if (voiced) {
        phase += 2.0 * kPi * f0 / sampleRateHz;
        double harm = 0.0;
        for (int k = 1; k <= 12; ++k) harm += std::sin(k * phase) / k;
        excitation = 0.3 * excitation + harm;
      }
      const double y = excitation + a1 * y1 + a2 * y2;
      y2 = y1;
      y1 = y;
      x(pos + i) += gain * env * env * y * (1.0 - radius);
    }
    pos += len + gap;
  }
  const double rms = std::sqrt(x.squaredNorm() / static_cast<double>(n));
  if (rms > 0.0) x /= rms;
  return TimeSignal{x, sampleRateHz};
}

// White Gaussian noise source.
inline TimeSignal whiteNoiseSource(double seconds, std::uint64_t seed, int sampleRateHz = 16000) {
  const auto n = static_cast<Eigen::Index>(std::llround(seconds * sampleRateHz));
  auto rng = streamRng(seed, 0x0015Eull);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = gauss(rng);
  return TimeSignal{x, sampleRateHz};
}

struct RenderOptions {
  int refMic = 0;
  // Scale all components so the mixture has unit sample variance.
  bool normalizeMixture = true;
  // Noise sources use independent rooms whose direct delays are shifted
  // by these amounts (one entry per source, applied to every mic).
  std::vector<std::vector<int>> noiseDirectDelays;
};

inline Scene renderScene(const TimeSignal& source, const std::vector<TimeSignal>& noiseSources,
                         const RoomSpec& room, double snrDb, const RenderOptions& opts = {}) {
  room.validate();
  detail::require(source.numSamples() >= 1 && source.numChannels() == 1,
                  "renderScene: source must be a nonempty mono signal");
  if (source.samples.squaredNorm() <= 0.0)
    throw InvalidArgument("renderScene: source has no energy");
  detail::require(opts.refMic >= 0 && opts.refMic < room.numMics, "renderScene: bad reference mic");
  for (const auto& ns : noiseSources) {
    detail::require(ns.sampleRateHz == source.sampleRateHz,
                    "renderScene: noise sample rate differs from source");
    detail::require(ns.numChannels() == 1, "renderScene: noise sources must be mono");
  }
  detail::require(room.sampleRateHz == source.sampleRateHz,
                  "renderScene: room sample rate differs from source");

  const Eigen::Index n = source.numSamples();
  const int mics = room.numMics;
  Eigen::MatrixXd reverberant(n, mics), direct(n, mics), noise = Eigen::MatrixXd::Zero(n, mics);
  const Eigen::VectorXd s = source.samples.col(0);
  for (int m = 0; m < mics; ++m) {
    const Eigen::VectorXd h = generateRir(room, m);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(room.directDelaySamples[m] + 1);
    d(room.directDelaySamples[m]) = 1.0;
    reverberant.col(m) = convolve(s, h);
    direct.col(m) = convolve(s, d);
  }

  for (std::size_t k = 0; k < noiseSources.size(); ++k) {
    RoomSpec nroom = room;
    if (k < opts.noiseDirectDelays.size()) {
      nroom.directDelaySamples = opts.noiseDirectDelays[k];
      int maxDelay = *std::max_element(nroom.directDelaySamples.begin(), nroom.directDelaySamples.end());
      nroom.rirLenSamples = std::max(nroom.rirLenSamples, maxDelay + 1);
    }
    Eigen::VectorXd ns = Eigen::VectorXd::Zero(n);
    const Eigen::Index len = std::min(n, noiseSources[k].numSamples());
    ns.head(len) = noiseSources[k].samples.col(0).head(len);
    for (int m = 0; m < mics; ++m)
      noise.col(m) += convolve(ns, generateRir(nroom, m, k + 1));
  }

  const double sEnergy = direct.col(opts.refMic).squaredNorm();
  const double nEnergy = noise.col(opts.refMic).squaredNorm();
  if (nEnergy > 0.0) noise *= std::sqrt(sEnergy / (nEnergy * std::pow(10.0, snrDb / 10.0)));

  Scene scene;
  scene.refMic = opts.refMic;
  scene.snrDb = snrDb;
  const int fs = source.sampleRateHz;
  scene.directPath = TimeSignal{direct, fs};
  scene.reverbResidual = TimeSignal{reverberant - direct, fs};
  scene.noise = TimeSignal{noise, fs};
  scene.mixture = TimeSignal{reverberant + noise, fs};

  if (opts.normalizeMixture) {
    const double mean = scene.mixture.samples.mean();
    const double var =
        (scene.mixture.samples.array() - mean).square().sum() / static_cast<double>(scene.mixture.samples.size());
    if (var > 0.0) {
      const double g = 1.0 / std::sqrt(var);
      for (TimeSignal* t : {&scene.mixture, &scene.directPath, &scene.reverbResidual, &scene.noise})
        t->samples *= g;
    }
  }
  return scene;
}

// Deterministic scene factory shared by the CLI and the test suites.
struct SceneRecipe {
  int numMics = 6;
  double t60Seconds = 0.6;
  double snrDb = 0.0;
  double durationSeconds = 3.0;
  int numNoiseSources = 2;
  std::uint64_t seed = 0;
  double tailScale = 0.05;
};

inline RoomSpec roomFor(const SceneRecipe& r, int sampleRateHz = 16000) {
  RoomSpec room;
  room.numMics = r.numMics;
  room.t60Seconds = r.t60Seconds;
  room.seed = r.seed;
  room.sampleRateHz = sampleRateHz;
  room.tailScale = r.tailScale;
  auto rng = streamRng(r.seed, 0xDE1A7ull);
  std::uniform_int_distribution<int> delay(0, 12);
  room.directDelaySamples.resize(static_cast<std::size_t>(r.numMics));
  for (int m = 0; m < r.numMics; ++m) room.directDelaySamples[m] = m == 0 ? 4 : delay(rng);
  const int maxDelay = *std::max_element(room.directDelaySamples.begin(), room.directDelaySamples.end());
  room.rirLenSamples = maxDelay + 1 + static_cast<int>(std::ceil(r.t60Seconds * sampleRateHz));
  return room;
}

inline Scene makeScene(const SceneRecipe& r, RoomSpec* roomOut = nullptr) {
  const int fs = 16000;
  const RoomSpec room = roomFor(r, fs);
  if (roomOut) *roomOut = room;
  const TimeSignal src = syntheticSource(r.durationSeconds, r.seed, fs);
  std::vector<TimeSignal> noises;
  RenderOptions opts;
  auto rng = streamRng(r.seed, 0x0DE1ull);
  std::uniform_int_distribution<int> delay(0, 24);
  for (int k = 0; k < r.numNoiseSources; ++k) {
    noises.push_back(whiteNoiseSource(r.durationSeconds, r.seed * 131 + static_cast<std::uint64_t>(k) + 1, fs));
    std::vector<int> d(static_cast<std::size_t>(r.numMics));
    for (auto& v : d) v = delay(rng);
    opts.noiseDirectDelays.push_back(d);
  }
  return renderScene(src, noises, room, r.snrDb, opts);
}

}  // namespace lodistort::scene_sim
