// Copyright 2026 The lodistort Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lodistort/error.hpp"

namespace lodistort {

using cplx = std::complex<double>;

// Single-channel time-frequency map, rows = frames, cols = frequency bins.
using TfMap = Eigen::MatrixXcd;
// Real-valued time-frequency map (masks, PSDs, magnitudes, angles).
using RealTfMap = Eigen::MatrixXd;

// Multichannel sampled waveform, rows = samples, cols = channels.
struct TimeSignal {
  Eigen::MatrixXd samples;
  int sampleRateHz = 16000;

  Eigen::Index numSamples() const { return samples.rows(); }
  Eigen::Index numChannels() const { return samples.cols(); }

  TimeSignal channel(Eigen::Index c) const {
    return TimeSignal{samples.col(c), sampleRateHz};
  }

  void validate() const {
    detail::require(sampleRateHz > 0, "TimeSignal: sample rate must be positive");
    detail::require(samples.rows() >= 1 && samples.cols() >= 1,
                    "TimeSignal: signal is empty");
    detail::require(samples.allFinite(), "TimeSignal: non-finite sample");
  }
};

// Complex T-F tensor [frames x bins x channels], stored t-major, f-middle,
// p-minor so that the channel vector of one T-F unit is contiguous.
class Spectrogram {
 public:
  Spectrogram() = default;
  Spectrogram(Eigen::Index frames, Eigen::Index bins, Eigen::Index channels)
      : frames_(frames),
        bins_(bins),
        channels_(channels),
        data_(static_cast<std::size_t>(frames * bins * channels), cplx{}) {
    detail::require(frames >= 0 && bins >= 0 && channels >= 0,
                    "Spectrogram: negative dimension");
  }

  static Spectrogram fromChannel(const TfMap& m) {
    Spectrogram s(m.rows(), m.cols(), 1);
    s.setChannel(0, m);
    return s;
  }

  Eigen::Index frames() const { return frames_; }
  Eigen::Index bins() const { return bins_; }
  Eigen::Index channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  cplx& operator()(Eigen::Index t, Eigen::Index f, Eigen::Index p) {
    return data_[index(t, f, p)];
  }
  const cplx& operator()(Eigen::Index t, Eigen::Index f, Eigen::Index p) const {
    return data_[index(t, f, p)];
  }

  // Channel vector at one T-F unit.
  Eigen::Map<const Eigen::VectorXcd> at(Eigen::Index t, Eigen::Index f) const {
    return {data_.data() + index(t, f, 0), channels_};
  }
  Eigen::Map<Eigen::VectorXcd> at(Eigen::Index t, Eigen::Index f) {
    return {data_.data() + index(t, f, 0), channels_};
  }

  TfMap channel(Eigen::Index p) const {
    TfMap m(frames_, bins_);
    for (Eigen::Index t = 0; t < frames_; ++t)
      for (Eigen::Index f = 0; f < bins_; ++f) m(t, f) = (*this)(t, f, p);
    return m;
  }

  void setChannel(Eigen::Index p, const TfMap& m) {
    detail::require(m.rows() == frames_ && m.cols() == bins_,
                    "Spectrogram::setChannel: shape mismatch");
    for (Eigen::Index t = 0; t < frames_; ++t)
      for (Eigen::Index f = 0; f < bins_; ++f) (*this)(t, f, p) = m(t, f);
  }

  // All frames of one frequency as a [T x P] matrix.
  Eigen::MatrixXcd frequencySlice(Eigen::Index f) const {
    Eigen::MatrixXcd z(frames_, channels_);
    for (Eigen::Index t = 0; t < frames_; ++t) z.row(t) = at(t, f).transpose();
    return z;
  }

  bool allFinite() const {
    for (const auto& v : data_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }

  bool sameShape(const Spectrogram& o) const {
    return frames_ == o.frames_ && bins_ == o.bins_ && channels_ == o.channels_;
  }

  std::string shapeString() const {
    std::ostringstream os;
    os << "[T=" << frames_ << ", F=" << bins_ << ", P=" << channels_ << "]";
    return os.str();
  }

  std::vector<cplx>& raw() { return data_; }
  const std::vector<cplx>& raw() const { return data_; }

  Spectrogram& operator*=(cplx c) {
    for (auto& v : data_) v *= c;
    return *this;
  }

  friend bool operator==(const Spectrogram& a, const Spectrogram& b) {
    return a.sameShape(b) && a.data_ == b.data_;
  }

 private:
  std::size_t index(Eigen::Index t, Eigen::Index f, Eigen::Index p) const {
    return static_cast<std::size_t>((t * bins_ + f) * channels_ + p);
  }

  Eigen::Index frames_ = 0;
  Eigen::Index bins_ = 0;
  Eigen::Index channels_ = 0;
  std::vector<cplx> data_;
};

inline constexpr double kPi = std::numbers::pi;

// Wraps an angle into (-pi, pi].
inline double wrapAngle(double a) {
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

}  // namespace lodistort
