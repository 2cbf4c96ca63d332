// Copyright 2026 The lodistort Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "lodistort/linalg.hpp"
#include "lodistort/types.hpp"

namespace lodistort::statistics {

// One P x P matrix per frequency bin.
using HermitianStack = std::vector<Eigen::MatrixXcd>;

struct CovarianceSet {
  HermitianStack phiS;
  HermitianStack phiV;
  std::optional<HermitianStack> phiYprime;
  std::optional<Eigen::MatrixXcd> steering;  // [F x P]

  Eigen::Index bins() const { return static_cast<Eigen::Index>(phiS.size()); }
  Eigen::Index channels() const { return phiS.empty() ? 0 : phiS.front().rows(); }
};

// Time-varying target power weights [T x F], strictly positive.
struct Psd {
  RealTfMap lambda;
};

// Real-valued T-F mask [T x F] in [0, 1].
struct Mask {
  RealTfMap m;
};

inline constexpr double kAbsoluteFloor = 1e-12;
inline constexpr double kDefaultEpsilon = 1e-5;

namespace detail {

// sum_t w(t) z(t) z(t)^H over the rows of z, symmetrized.
inline Eigen::MatrixXcd weightedOuterSum(const Eigen::MatrixXcd& z, const Eigen::VectorXd& w) {
  const Eigen::MatrixXcd zw = w.asDiagonal() * z;
  return linalg::symmetrize(zw.transpose() * z.conjugate());
}

inline Eigen::MatrixXcd outerSum(const Eigen::MatrixXcd& z) {
  return linalg::symmetrize(z.transpose() * z.conjugate());
}

}  // namespace detail

// Target and non-target covariances from a multichannel target estimate;
// the non-target signal is the mixture minus the estimate.
inline CovarianceSet signalCovariances(const Spectrogram& mixture, const Spectrogram& estimate) {
  if (!mixture.sameShape(estimate))
    throw InvalidArgument("signalCovariances: mixture " + mixture.shapeString() +
                          " and estimate " + estimate.shapeString() + " differ in shape");
  CovarianceSet cov;
  cov.phiS.reserve(static_cast<std::size_t>(mixture.bins()));
  cov.phiV.reserve(static_cast<std::size_t>(mixture.bins()));
  for (Eigen::Index f = 0; f < mixture.bins(); ++f) {
    const Eigen::MatrixXcd s = estimate.frequencySlice(f);
    const Eigen::MatrixXcd v = mixture.frequencySlice(f) - s;
    cov.phiS.push_back(detail::outerSum(s));
    cov.phiV.push_back(detail::outerSum(v));
  }
  return cov;
}

// |est| / (|est| + |ref - est|), with 0/0 mapped to 0.
inline Mask computeMask(const TfMap& estimateQ, const TfMap& reference) {
  lodistort::detail::require(estimateQ.rows() == reference.rows() && estimateQ.cols() == reference.cols(),
                             "computeMask: shape mismatch");
  Mask mask{RealTfMap(estimateQ.rows(), estimateQ.cols())};
  for (Eigen::Index t = 0; t < estimateQ.rows(); ++t) {
    for (Eigen::Index f = 0; f < estimateQ.cols(); ++f) {
      const double s = std::abs(estimateQ(t, f));
      const double denom = s + std::abs(reference(t, f) - estimateQ(t, f));
      mask.m(t, f) = denom > 0.0 ? s / denom : 0.0;
    }
  }
  return mask;
}

inline CovarianceSet maskedCovariances(const Spectrogram& input, const Mask& mask) {
  lodistort::detail::require(mask.m.rows() == input.frames() && mask.m.cols() == input.bins(),
                             "maskedCovariances: mask shape does not match input " + input.shapeString());
  lodistort::detail::require((mask.m.array() >= 0.0).all() && (mask.m.array() <= 1.0).all(),
                             "maskedCovariances: mask values must lie in [0, 1]");
  CovarianceSet cov;
  for (Eigen::Index f = 0; f < input.bins(); ++f) {
    const Eigen::MatrixXcd z = input.frequencySlice(f);
    const Eigen::VectorXd m = mask.m.col(f);
    cov.phiS.push_back(detail::weightedOuterSum(z, m));
    cov.phiV.push_back(detail::weightedOuterSum(z, Eigen::VectorXd::Ones(m.size()) - m));
  }
  return cov;
}

// sum_t z z^H / lambda, the weighted covariance of the convolutional
// beamformer's distortionless stage.
inline HermitianStack psdWeightedCovariance(const Spectrogram& input, const Psd& psd) {
  lodistort::detail::require(psd.lambda.rows() == input.frames() && psd.lambda.cols() == input.bins(),
                             "psdWeightedCovariance: PSD shape does not match input");
  HermitianStack out;
  for (Eigen::Index f = 0; f < input.bins(); ++f)
    out.push_back(detail::weightedOuterSum(input.frequencySlice(f), psd.lambda.col(f).cwiseInverse()));
  return out;
}

struct SteeringResult {
  Eigen::MatrixXcd steering;           // [F x P], unit-norm rows
  Eigen::VectorXd principalValue;      // [F]
  std::vector<bool> degenerate;        // top eigenvalue not separated
};

inline constexpr double kHermitianTolerance = 1e-10;

// Principal eigenvector per frequency, rotated so entry refMic is real and
// nonnegative.
inline SteeringResult steeringVector(const HermitianStack& phiS, int refMic = 0) {
  const auto bins = static_cast<Eigen::Index>(phiS.size());
  const Eigen::Index p = bins == 0 ? 0 : phiS.front().rows();
  lodistort::detail::require(refMic >= 0 && (p == 0 || refMic < p), "steeringVector: bad reference mic");
  SteeringResult out{Eigen::MatrixXcd(bins, p), Eigen::VectorXd(bins), std::vector<bool>(bins, false)};
  for (Eigen::Index f = 0; f < bins; ++f) {
    const auto& a = phiS[static_cast<std::size_t>(f)];
    if (linalg::hermitianError(a) > kHermitianTolerance)
      throw InvalidArgument("steeringVector: target covariance at bin " + std::to_string(f) +
                            " is not Hermitian");
    const auto eig = linalg::jacobiEigen(a);
    Eigen::VectorXcd d = eig.vectors.col(p - 1);
    linalg::fixPhase(d, refMic);
    out.steering.row(f) = d.transpose();
    out.principalValue(f) = eig.values(p - 1);
    const double top = std::abs(eig.values(p - 1));
    out.degenerate[static_cast<std::size_t>(f)] =
        p > 1 && eig.values(p - 1) - eig.values(p - 2) <= 1e-9 * std::max(top, 1e-300);
  }
  return out;
}

// Floored PSD from a 1- or P-channel estimate: the per-bin power summed over
// channels, raised to epsilon times its global maximum, then to the absolute
// floor.
inline Psd psdFloor(const Spectrogram& estimates, double epsilon = kDefaultEpsilon) {
  lodistort::detail::require(epsilon > 0.0, "psdFloor: epsilon must be positive");
  RealTfMap pow = RealTfMap::Zero(estimates.frames(), estimates.bins());
  for (Eigen::Index t = 0; t < estimates.frames(); ++t)
    for (Eigen::Index f = 0; f < estimates.bins(); ++f)
      pow(t, f) = estimates.at(t, f).squaredNorm();
  const double peak = pow.size() > 0 ? pow.maxCoeff() : 0.0;
  const double floor = std::max(epsilon * peak, kAbsoluteFloor);
  return Psd{pow.cwiseMax(floor)};
}

inline Psd psdFloor(const TfMap& estimate, double epsilon = kDefaultEpsilon) {
  return psdFloor(Spectrogram::fromChannel(estimate), epsilon);
}

}  // namespace lodistort::statistics
