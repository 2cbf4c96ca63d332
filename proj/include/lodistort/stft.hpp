// Copyright 2026 The lodistort Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "lodistort/types.hpp"

namespace lodistort::stft {

enum class WindowKind { sqrtHann };

// Analysis configuration. The defaults are 32 ms windows with an 8 ms hop
// and a 512-point FFT at 16 kHz.
struct StftConfig {
  int windowLenSamples = 512;
  int hopSamples = 128;
  int fftSize = 512;
  WindowKind windowKind = WindowKind::sqrtHann;
  int sampleRateHz = 16000;

  Eigen::Index freqBins() const { return fftSize / 2 + 1; }
  // Zero padding applied in front of (and behind) the signal.
  int padSamples() const { return windowLenSamples - hopSamples; }

  void validate() const {
    detail::require(windowLenSamples > 0 && hopSamples > 0 && fftSize > 0 &&
                        sampleRateHz > 0,
                    "StftConfig: sizes and sample rate must be positive");
    detail::require(windowLenSamples % hopSamples == 0,
                    "StftConfig: hop must divide the window length");
    detail::require(fftSize >= windowLenSamples,
                    "StftConfig: FFT size must be at least the window length");
    detail::require(fftSize % 2 == 0, "StftConfig: FFT size must be even");
  }

  // Frame count for a signal of numSamples samples.
  Eigen::Index numFrames(Eigen::Index numSamples) const {
    const Eigen::Index covered = numSamples + windowLenSamples - hopSamples;
    return (covered + hopSamples - 1) / hopSamples;
  }
};

// Square root of the periodic (DFT-even) Hann window.
inline Eigen::VectorXd analysisWindow(const StftConfig& cfg) {
  const int n = cfg.windowLenSamples;
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i)
    w(i) = std::sqrt(0.5 - 0.5 * std::cos(2.0 * kPi * i / n));
  return w;
}

inline Spectrogram analyze(const TimeSignal& signal, const StftConfig& cfg) {
  cfg.validate();
  if (signal.numSamples() < 1 || signal.numChannels() < 1)
    throw InvalidArgument("stft::analyze: empty signal");
  if (signal.sampleRateHz != cfg.sampleRateHz)
    throw InvalidArgument("stft::analyze: sample rate " +
                          std::to_string(signal.sampleRateHz) +
                          " does not match configured " +
                          std::to_string(cfg.sampleRateHz));

  const Eigen::Index n = signal.numSamples();
  const Eigen::Index channels = signal.numChannels();
  const Eigen::Index frames = cfg.numFrames(n);
  const Eigen::Index bins = cfg.freqBins();
  const int pad = cfg.padSamples();
  const Eigen::VectorXd window = analysisWindow(cfg);

  Spectrogram out(frames, bins, channels);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(static_cast<std::size_t>(cfg.fftSize));
  std::vector<cplx> spectrum(static_cast<std::size_t>(cfg.fftSize));

  for (Eigen::Index p = 0; p < channels; ++p) {
    for (Eigen::Index t = 0; t < frames; ++t) {
      std::fill(frame.begin(), frame.end(), 0.0);
      const Eigen::Index start = t * cfg.hopSamples - pad;
      for (int i = 0; i < cfg.windowLenSamples; ++i) {
        const Eigen::Index s = start + i;
        if (s >= 0 && s < n) frame[i] = window(i) * signal.samples(s, p);
      }
      fft.fwd(spectrum.data(), frame.data(), cfg.fftSize);
      for (Eigen::Index f = 0; f < bins; ++f) out(t, f, p) = spectrum[f];
    }
  }
  return out;
}

inline TimeSignal synthesize(const Spectrogram& spec, const StftConfig& cfg,
                             Eigen::Index outLenSamples) {
  cfg.validate();
  if (spec.bins() != cfg.freqBins())
    throw InvalidArgument("stft::synthesize: spectrogram has " +
                          std::to_string(spec.bins()) + " bins, config expects " +
                          std::to_string(cfg.freqBins()));
  detail::require(outLenSamples >= 0, "stft::synthesize: negative output length");

  const Eigen::Index frames = spec.frames();
  const Eigen::Index channels = spec.channels();
  const int pad = cfg.padSamples();
  const Eigen::Index padded = (frames - 1) * cfg.hopSamples + cfg.windowLenSamples;
  const Eigen::VectorXd window = analysisWindow(cfg);

  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(std::max<Eigen::Index>(padded, 0), channels);
  Eigen::VectorXd norm = Eigen::VectorXd::Zero(acc.rows());
  for (Eigen::Index t = 0; t < frames; ++t)
    for (int i = 0; i < cfg.windowLenSamples; ++i)
      norm(t * cfg.hopSamples + i) += window(i) * window(i);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<cplx> spectrum(static_cast<std::size_t>(cfg.freqBins()));
  std::vector<double> frame(static_cast<std::size_t>(cfg.fftSize));

  for (Eigen::Index p = 0; p < channels; ++p) {
    for (Eigen::Index t = 0; t < frames; ++t) {
      for (Eigen::Index f = 0; f < spec.bins(); ++f) spectrum[f] = spec(t, f, p);
      // DC and Nyquist of a real frame are real.
      spectrum.front().imag(0.0);
      spectrum.back().imag(0.0);
      fft.inv(frame.data(), spectrum.data(), cfg.fftSize);
      for (int i = 0; i < cfg.windowLenSamples; ++i)
        acc(t * cfg.hopSamples + i, p) += window(i) * frame[i];
    }
  }

  TimeSignal out{Eigen::MatrixXd::Zero(outLenSamples, channels), cfg.sampleRateHz};
  for (Eigen::Index s = 0; s < outLenSamples; ++s) {
    const Eigen::Index src = s + pad;
    if (src >= acc.rows()) break;
    const double denom = std::max(norm(src), 1e-12);
    out.samples.row(s) = acc.row(src) / denom;
  }
  return out;
}

}  // namespace lodistort::stft
