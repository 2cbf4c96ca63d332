// Copyright 2026 The lodistort Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "lodistort/types.hpp"

namespace lodistort::metrics {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kDefaultMaskThresholdDb = -60.0;

struct EnergyMask {
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> e;
  Eigen::Index count() const { return e.count(); }
};

struct MetricsReport {
  double siSdrDb = 0.0;
  double pdsAccPercent = 0.0;
  double pSnrDb = 0.0;
  std::string pipelineName;
  int refMic = 0;
};

inline double siSdr(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference) {
  if (estimate.size() != reference.size())
    throw InvalidArgument("siSdr: estimate has " + std::to_string(estimate.size()) +
                          " samples, reference has " + std::to_string(reference.size()));
  const double refEnergy = reference.squaredNorm();
  if (!(refEnergy > 0.0)) throw InvalidArgument("siSdr: reference is all zero");
  const double alpha = estimate.dot(reference) / refEnergy;
  if (alpha == 0.0) return -kInf;
  const Eigen::VectorXd target = alpha * reference;
  const double noise = (target - estimate).squaredNorm();
  if (noise == 0.0) return kInf;
  return 10.0 * std::log10(target.squaredNorm() / noise);
}

inline double siSdr(const TimeSignal& estimate, const TimeSignal& reference) {
  detail::require(estimate.numChannels() == 1 && reference.numChannels() == 1,
                  "siSdr: signals must be single-channel");
  return siSdr(Eigen::VectorXd(estimate.samples.col(0)), Eigen::VectorXd(reference.samples.col(0)));
}

inline EnergyMask energyMask(const TfMap& targetQ, double thresholdDb = kDefaultMaskThresholdDb) {
  const RealTfMap power = targetQ.cwiseAbs2();
  const double peak = power.size() > 0 ? power.maxCoeff() : 0.0;
  if (!(peak > 0.0)) throw InvalidArgument("energyMask: target is all zero");
  EnergyMask mask{Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>(power.rows(), power.cols())};
  for (Eigen::Index t = 0; t < power.rows(); ++t)
    for (Eigen::Index f = 0; f < power.cols(); ++f)
      mask.e(t, f) = power(t, f) > 0.0 && 10.0 * std::log10(power(t, f) / peak) >= thresholdDb;
  return mask;
}

// Sign of the wrapped difference: +1 when nonnegative, -1 otherwise.
inline int phaseDiffSign(cplx a, cplx ref) { return wrapAngle(std::arg(a) - std::arg(ref)) >= 0.0 ? 1 : -1; }

// Percentage of active target units whose sign of angle(est) - angle(mix)
// agrees with that of angle(target) - angle(mix).
inline double pdsAcc(const TfMap& estQ, const TfMap& targetQ, const TfMap& mixQ,
                     double thresholdDb = kDefaultMaskThresholdDb) {
  detail::require(estQ.rows() == targetQ.rows() && estQ.cols() == targetQ.cols() &&
                      mixQ.rows() == targetQ.rows() && mixQ.cols() == targetQ.cols(),
                  "pdsAcc: shape mismatch");
  const EnergyMask mask = energyMask(targetQ, thresholdDb);
  if (mask.count() == 0) throw InvalidArgument("pdsAcc: energy mask is empty");
  Eigen::Index agree = 0;
  for (Eigen::Index t = 0; t < targetQ.rows(); ++t)
    for (Eigen::Index f = 0; f < targetQ.cols(); ++f)
      if (mask.e(t, f) && phaseDiffSign(estQ(t, f), mixQ(t, f)) == phaseDiffSign(targetQ(t, f), mixQ(t, f)))
        ++agree;
  return 100.0 * static_cast<double>(agree) / static_cast<double>(mask.count());
}

// Phase SNR under oracle magnitude.
inline double pSnr(const RealTfMap& estPhase, const TfMap& targetQ) {
  detail::require(estPhase.rows() == targetQ.rows() && estPhase.cols() == targetQ.cols(),
                  "pSnr: shape mismatch");
  double num = 0.0, den = 0.0;
  for (Eigen::Index t = 0; t < targetQ.rows(); ++t) {
    for (Eigen::Index f = 0; f < targetQ.cols(); ++f) {
      const cplx s = targetQ(t, f);
      num += std::norm(s);
      // S - |S| e^{j phi} = S (1 - e^{j (phi - angle S)}), exact when phi = angle S.
      den += std::norm(s * (1.0 - std::polar(1.0, estPhase(t, f) - std::arg(s))));
    }
  }
  if (!(num > 0.0)) throw InvalidArgument("pSnr: target is all zero");
  if (den == 0.0) return kInf;
  return 10.0 * std::log10(num / den);
}

inline RealTfMap phaseOf(const TfMap& x) { return x.unaryExpr([](cplx v) { return std::arg(v); }).real(); }

inline double pSnr(const TfMap& estimate, const TfMap& targetQ) { return pSnr(phaseOf(estimate), targetQ); }

}  // namespace lodistort::metrics
