// Copyright 2026 The lodistort Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "lodistort/types.hpp"

// Triangle geometry of a mixture bin Y = S + V: the two phase candidates
// the law of cosines leaves for S, and the chance that a low-distortion
// estimate S + residual lands on the wrong side of Y.
namespace lodistort::phase_geometry {

struct PhaseCandidates {
  RealTfMap absDiff;      // |angle(S) - angle(Y)| in [0, pi]
  RealTfMap candidateA;   // angle(Y) + absDiff, wrapped
  RealTfMap candidateB;   // angle(Y) - absDiff, wrapped
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> degenerate;  // |Y||S| = 0
};

inline PhaseCandidates phaseCandidates(const TfMap& mixQ, const RealTfMap& magS, const RealTfMap& magV) {
  detail::require(mixQ.rows() == magS.rows() && mixQ.cols() == magS.cols() && magS.rows() == magV.rows() &&
                      magS.cols() == magV.cols(),
                  "phaseCandidates: shape mismatch");
  detail::require((magS.array() >= 0.0).all() && (magV.array() >= 0.0).all(),
                  "phaseCandidates: magnitudes must be nonnegative");
  const Eigen::Index rows = mixQ.rows(), cols = mixQ.cols();
  PhaseCandidates out{RealTfMap(rows, cols), RealTfMap(rows, cols), RealTfMap(rows, cols),
                      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>(rows, cols)};
  for (Eigen::Index t = 0; t < rows; ++t) {
    for (Eigen::Index f = 0; f < cols; ++f) {
      const double y = std::abs(mixQ(t, f));
      const double s = magS(t, f), v = magV(t, f);
      const double phaseY = std::arg(mixQ(t, f));
      double theta = 0.0;
      const bool degen = y * s == 0.0;
      if (!degen) theta = std::acos(std::clamp((y * y + s * s - v * v) / (2.0 * y * s), -1.0, 1.0));
      out.absDiff(t, f) = theta;
      out.candidateA(t, f) = wrapAngle(phaseY + theta);
      out.candidateB(t, f) = wrapAngle(phaseY - theta);
      out.degenerate(t, f) = degen;
    }
  }
  return out;
}

// Probability that S + V'' with |V''| fixed and uniform phase falls on the
// opposite side of the line through Y from S, where theta is the angle
// between S and Y: (1/pi) acos(|S| sin(theta) / |V''|).
inline double signFlipProbability(double magS, double magVddot, double theta) {
  detail::require(magS >= 0.0 && magVddot >= 0.0, "signFlipProbability: magnitudes must be nonnegative");
  if (magVddot == 0.0) return 0.0;
  const double arg = magS * std::sin(theta) / magVddot;
  if (arg >= 1.0) return 0.0;
  return std::acos(std::max(arg, -1.0)) / kPi;
}

// Monte-Carlo estimate of the same probability: fix angle(Y) = 0, place S
// at angle theta, draw the residual phase uniformly and count how often the
// estimate's wrapped angle has the opposite sign to theta.
inline double signFlipMonteCarlo(double magS, double magVddot, double theta, std::int64_t draws,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(-kPi, kPi);
  const cplx s = std::polar(magS, theta);
  const bool truthNonneg = wrapAngle(theta) >= 0.0;
  std::int64_t flips = 0;
  for (std::int64_t i = 0; i < draws; ++i) {
    const cplx est = s + std::polar(magVddot, phase(rng));
    const bool estNonneg = std::arg(est) >= 0.0;
    flips += estNonneg != truthNonneg;
  }
  return static_cast<double>(flips) / static_cast<double>(draws);
}

}  // namespace lodistort::phase_geometry
