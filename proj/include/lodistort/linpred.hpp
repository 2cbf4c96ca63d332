// Copyright 2026 The lodistort Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "lodistort/linalg.hpp"
#include "lodistort/statistics.hpp"
#include "lodistort/types.hpp"

// Weighted linear-prediction dereverberation: multichannel WPE and monaural
// forward convolutive prediction (FCP).
namespace lodistort::linpred {

enum class FilterKind { wpe, fcp };

inline constexpr int kDefaultDelay = 3;
inline constexpr int kDefaultFcpTaps = 40;
inline constexpr double kDefaultFcpEpsilon = 1e-3;
inline constexpr double kDefaultLoading = 1e-8;

// WPE tap count by microphone count; other counts interpolate downwards.
inline int defaultWpeTaps(Eigen::Index mics) {
  if (mics <= 1) return 37;
  if (mics == 2) return 30;
  if (mics <= 6) return 10;
  return 8;
}

struct PredictionFilter {
  Eigen::MatrixXcd g;  // [F x D], D = taps * P for WPE, taps for FCP
  int taps = 1;
  int delay = 0;
  FilterKind kind = FilterKind::wpe;
};

// Delayed multi-tap stack, one [T x D] matrix per frequency. Row t holds
// frames t-delay, ..., t-delay-taps+1; within each frame block the channels
// are contiguous. Frames before the start are zero.
class DelayedStack {
 public:
  DelayedStack(const Spectrogram& field, int taps, int delay)
      : taps_(taps), delay_(delay), channels_(field.channels()) {
    detail::require(taps >= 1, "buildDelayedStack: taps must be >= 1");
    detail::require(delay >= 0, "buildDelayedStack: delay must be >= 0");
    const Eigen::Index t = field.frames();
    const Eigen::Index d = static_cast<Eigen::Index>(taps) * channels_;
    perBin_.reserve(static_cast<std::size_t>(field.bins()));
    for (Eigen::Index f = 0; f < field.bins(); ++f) {
      Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(t, d);
      for (Eigen::Index row = 0; row < t; ++row) {
        for (int k = 0; k < taps; ++k) {
          const Eigen::Index src = row - delay - k;
          if (src < 0) break;
          s.block(row, k * channels_, 1, channels_) = field.at(src, f).transpose();
        }
      }
      perBin_.push_back(std::move(s));
    }
  }

  Eigen::Index frames() const { return perBin_.empty() ? 0 : perBin_.front().rows(); }
  Eigen::Index bins() const { return static_cast<Eigen::Index>(perBin_.size()); }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(taps_) * channels_; }
  int taps() const { return taps_; }
  int delay() const { return delay_; }

  const Eigen::MatrixXcd& bin(Eigen::Index f) const { return perBin_[static_cast<std::size_t>(f)]; }
  cplx operator()(Eigen::Index t, Eigen::Index f, Eigen::Index d) const { return bin(f)(t, d); }

 private:
  int taps_;
  int delay_;
  Eigen::Index channels_;
  std::vector<Eigen::MatrixXcd> perBin_;
};

inline DelayedStack buildDelayedStack(const Spectrogram& field, int taps, int delay) {
  return DelayedStack(field, taps, delay);
}

namespace detail {

// Solves (sum_t x x^H / lambda) G = sum_t x y^* / lambda for every column y
// of targets, at one frequency. A stack with no energy yields G = 0.
inline Eigen::MatrixXcd weightedSolve(const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& targets,
                                      const Eigen::VectorXd& lambda, double loading, Eigen::Index f) {
  const Eigen::VectorXd inv = lambda.cwiseInverse();
  const Eigen::MatrixXcd xw = inv.asDiagonal() * x;
  const Eigen::MatrixXcd gram = linalg::symmetrize(xw.transpose() * x.conjugate());
  const Eigen::MatrixXcd rhs = xw.transpose() * targets.conjugate();
  if (gram.diagonal().real().sum() == 0.0) return Eigen::MatrixXcd::Zero(x.cols(), targets.cols());
  const auto llt = linalg::cholesky(linalg::loaded(gram, loading));
  if (!llt)
    throw NumericalError("weighted least squares: singular Gram matrix at frequency bin " +
                         std::to_string(f) + " after diagonal loading");
  return llt->solve(rhs);
}

inline void checkWeights(const statistics::Psd& w, Eigen::Index frames, Eigen::Index bins, const char* who) {
  lodistort::detail::require(w.lambda.rows() == frames && w.lambda.cols() == bins,
                             std::string(who) + ": weight shape does not match");
  lodistort::detail::require((w.lambda.array() > 0.0).all(), std::string(who) + ": weights must be positive");
}

}  // namespace detail

// Per frequency, argmin_g sum_t |target - g^H x|^2 / lambda. Returns [F x D].
inline Eigen::MatrixXcd solveWeightedLp(const DelayedStack& stack, const TfMap& target,
                                        const statistics::Psd& weights,
                                        double loading = kDefaultLoading) {
  lodistort::detail::require(target.rows() == stack.frames() && target.cols() == stack.bins(),
                             "solveWeightedLp: target shape does not match stack");
  detail::checkWeights(weights, stack.frames(), stack.bins(), "solveWeightedLp");
  Eigen::MatrixXcd g(stack.bins(), stack.dim());
  for (Eigen::Index f = 0; f < stack.bins(); ++f)
    g.row(f) = detail::weightedSolve(stack.bin(f), target.col(f), weights.lambda.col(f), loading, f)
                   .col(0)
                   .transpose();
  return g;
}

// g^H x(t) for every frame of one frequency.
inline Eigen::VectorXcd predict(const DelayedStack& stack, const Eigen::MatrixXcd& g, Eigen::Index f) {
  return stack.bin(f) * g.row(f).transpose().conjugate();
}

struct WpeResult {
  PredictionFilter filter;  // filter of the last requested output channel
  TfMap dereverbed;         // at the requested reference channel
};

struct WpeAllResult {
  std::vector<PredictionFilter> filters;  // one per channel
  Spectrogram dereverbed;                 // [T x F x P]
};

// Dereverberates every channel of field. The Gram matrix is shared by all
// channels because the stack and the PSD weights are.
inline WpeAllResult wpeAllChannels(const Spectrogram& field, const statistics::Psd& psd, int taps,
                                   int delay = kDefaultDelay, double loading = kDefaultLoading) {
  lodistort::detail::require(delay >= 1, "wpe: prediction delay must be >= 1");
  detail::checkWeights(psd, field.frames(), field.bins(), "wpe");
  const DelayedStack stack(field, taps, delay);
  const Eigen::Index p = field.channels();
  WpeAllResult out{std::vector<PredictionFilter>(static_cast<std::size_t>(p),
                                                 PredictionFilter{Eigen::MatrixXcd(field.bins(), stack.dim()),
                                                                  taps, delay, FilterKind::wpe}),
                   Spectrogram(field.frames(), field.bins(), p)};
  for (Eigen::Index f = 0; f < field.bins(); ++f) {
    const Eigen::MatrixXcd y = field.frequencySlice(f);
    const Eigen::MatrixXcd g = detail::weightedSolve(stack.bin(f), y, psd.lambda.col(f), loading, f);
    const Eigen::MatrixXcd residual = y - stack.bin(f) * g.conjugate();
    for (Eigen::Index q = 0; q < p; ++q) out.filters[static_cast<std::size_t>(q)].g.row(f) = g.col(q).transpose();
    for (Eigen::Index t = 0; t < field.frames(); ++t)
      for (Eigen::Index q = 0; q < p; ++q) out.dereverbed(t, f, q) = residual(t, q);
  }
  return out;
}

inline WpeResult wpe(const Spectrogram& field, const statistics::Psd& psd, int taps,
                     int delay = kDefaultDelay, int q = 0, double loading = kDefaultLoading) {
  lodistort::detail::require(q >= 0 && q < field.channels(), "wpe: reference mic out of range");
  lodistort::detail::require(delay >= 1, "wpe: prediction delay must be >= 1");
  detail::checkWeights(psd, field.frames(), field.bins(), "wpe");
  const DelayedStack stack(field, taps, delay);
  const TfMap target = field.channel(q);
  PredictionFilter filter{solveWeightedLp(stack, target, psd, loading), taps, delay, FilterKind::wpe};
  TfMap out(field.frames(), field.bins());
  for (Eigen::Index f = 0; f < field.bins(); ++f) out.col(f) = target.col(f) - predict(stack, filter.g, f);
  return {std::move(filter), std::move(out)};
}

struct FcpResult {
  PredictionFilter filter;
  TfMap dereverbed;
  statistics::Psd weights;  // eta
};

// Forward convolutive prediction: filters the target estimate to explain
// the reference, then subtracts the explained excess over the estimate.
inline FcpResult fcp(const TfMap& reference, const TfMap& estimate, int taps = kDefaultFcpTaps,
                     double epsilonPrime = kDefaultFcpEpsilon, double loading = kDefaultLoading) {
  lodistort::detail::require(reference.rows() == estimate.rows() && reference.cols() == estimate.cols(),
                             "fcp: reference and estimate differ in shape");
  lodistort::detail::require(epsilonPrime > 0.0, "fcp: epsilon must be positive");
  const RealTfMap resid = (reference - estimate).cwiseAbs2();
  const double peak = resid.size() > 0 ? resid.maxCoeff() : 0.0;
  statistics::Psd eta{resid.cwiseMax(std::max(epsilonPrime * peak, statistics::kAbsoluteFloor))};

  const DelayedStack stack(Spectrogram::fromChannel(estimate), taps, 0);
  PredictionFilter filter{solveWeightedLp(stack, reference, eta, loading), taps, 0, FilterKind::fcp};
  TfMap out(reference.rows(), reference.cols());
  for (Eigen::Index f = 0; f < reference.cols(); ++f)
    out.col(f) = reference.col(f) - (predict(stack, filter.g, f) - estimate.col(f));
  return {std::move(filter), std::move(out), std::move(eta)};
}

}  // namespace lodistort::linpred
