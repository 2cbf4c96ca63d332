// Copyright 2026 The lodistort Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include "lodistort/metrics.hpp"
#include "lodistort/phase_geometry.hpp"
#include "oracles.hpp"

namespace lodistort {
namespace {

using testing::Rng;
constexpr double kPiD = std::numbers::pi;

// Cosine form of the phase SNR, evaluated directly.
double pSnrCosine(const RealTfMap& phi, const TfMap& s) {
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    num += std::norm(s.data()[i]);
    den += 2.0 * std::norm(s.data()[i]) * (1.0 - std::cos(phi.data()[i] - std::arg(s.data()[i])));
  }
  return 10.0 * std::log10(num / den);
}

TEST(PhaseGeometry, NoiselessCase) {
  TfMap y(1, 1);
  y << std::polar(2.0, 0.7);
  const auto c = phase_geometry::phaseCandidates(y, RealTfMap::Constant(1, 1, 2.0), RealTfMap::Zero(1, 1));
  EXPECT_NEAR(c.absDiff(0, 0), 0.0, 1e-7);
  EXPECT_NEAR(c.candidateA(0, 0), 0.7, 1e-7);
  EXPECT_NEAR(c.candidateB(0, 0), 0.7, 1e-7);
}

TEST(PhaseGeometry, EquilateralTriangle) {
  TfMap y(1, 1);
  y << cplx(1.0, 0.0);
  const auto c = phase_geometry::phaseCandidates(y, RealTfMap::Ones(1, 1), RealTfMap::Ones(1, 1));
  EXPECT_NEAR(c.absDiff(0, 0), kPiD / 3.0, 1e-15);
}

TEST(PhaseGeometry, OneCandidateIsTruePhase) {
  Rng g(1);
  const TfMap s = testing::randomMatrix(g, 30, 20), v = testing::randomMatrix(g, 30, 20);
  const TfMap y = s + v;
  const auto c = phase_geometry::phaseCandidates(y, s.cwiseAbs(), v.cwiseAbs());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double truth = std::arg(s.data()[i]);
    const double da = std::abs(testing::wrapped(c.candidateA.data()[i] - truth));
    const double db = std::abs(testing::wrapped(c.candidateB.data()[i] - truth));
    // acos loses precision near +-1; the bound is loose only there.
    EXPECT_LT(std::min(da, db), 1e-6);
  }
}

TEST(PhaseGeometry, ClampsInconsistentMagnitudes) {
  TfMap y(1, 2);
  y << cplx(1.0, 0.0), cplx(1.0, 0.0);
  RealTfMap ms(1, 2), mv(1, 2);
  ms << 1.0, 1.0;
  mv << 5.0, 0.0;  // violates the triangle inequality; then exact
  const auto c = phase_geometry::phaseCandidates(y, ms, mv);
  EXPECT_NEAR(c.absDiff(0, 0), kPiD, 1e-15);
  EXPECT_NEAR(c.absDiff(0, 1), 0.0, 1e-15);
  EXPECT_THROW(phase_geometry::phaseCandidates(y, -ms, mv), InvalidArgument);
}

TEST(PhaseGeometry, SignFlipBoundaries) {
  EXPECT_EQ(phase_geometry::signFlipProbability(1.0, 0.5, kPiD / 2), 0.0);
  EXPECT_EQ(phase_geometry::signFlipProbability(2.5, 1.0, kPiD / 6), 0.0);
  EXPECT_EQ(phase_geometry::signFlipProbability(1.0, 3.0, 0.0), 0.5);
  EXPECT_EQ(phase_geometry::signFlipProbability(0.0, 3.0, 1.0), 0.5);
  EXPECT_NEAR(phase_geometry::signFlipProbability(1.0, 2.0, kPiD / 6), std::acos(0.25) / kPiD, 1e-15);
  EXPECT_NEAR(std::acos(0.25) / kPiD, 0.4196, 1e-4);
}

TEST(PhaseGeometry, SignFlipMonotone) {
  double prev = 1.0;
  for (double ratio = 0.05; ratio < 3.0; ratio += 0.05) {
    const double p = phase_geometry::signFlipProbability(ratio, 1.0, 0.9);
    EXPECT_LE(p, prev + 1e-15);
    prev = p;
  }
  prev = 1.0;
  for (double th = 0.0; th < kPiD / 2; th += 0.05) {
    const double p = phase_geometry::signFlipProbability(1.0, 1.5, th);
    EXPECT_LE(p, prev + 1e-15);
    prev = p;
  }
}

TEST(PhaseGeometry, MonteCarloMatchesFormula) {
  const double mc = phase_geometry::signFlipMonteCarlo(1.0, 2.0, kPiD / 6, 1'000'000, 5);
  EXPECT_NEAR(mc, std::acos(0.25) / kPiD, 0.002);
}

TEST(Metrics, SiSdrScaleInvarianceAndInfinities) {
  Rng g(2);
  const TimeSignal r = testing::randomSignal(g, 1000);
  EXPECT_EQ(metrics::siSdr(TimeSignal{2.7 * r.samples, 16000}, r), metrics::kInf);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(4), b = Eigen::VectorXd::Zero(4);
  a(0) = 1.0;
  b(1) = 1.0;
  EXPECT_EQ(metrics::siSdr(a, b), -metrics::kInf);
  const TimeSignal e = testing::randomSignal(g, 1000);
  const double base = metrics::siSdr(e, r);
  for (double c : {0.5, -3.0, 1e6}) EXPECT_NEAR(metrics::siSdr(Eigen::VectorXd(c * e.samples.col(0)), Eigen::VectorXd(r.samples.col(0))), base, 1e-10)
      << "c=" << c;
}

TEST(Metrics, SiSdrMatchesFormula) {
  Rng g(3);
  const Eigen::VectorXd s = testing::randomSignal(g, 500).samples.col(0);
  const Eigen::VectorXd e = s + 0.3 * testing::randomSignal(g, 500).samples.col(0);
  double dot = 0.0, ss = 0.0;
  for (Eigen::Index i = 0; i < 500; ++i) {
    dot += e(i) * s(i);
    ss += s(i) * s(i);
  }
  double tgt = 0.0, err = 0.0;
  for (Eigen::Index i = 0; i < 500; ++i) {
    const double t = dot / ss * s(i);
    tgt += t * t;
    err += (e(i) - t) * (e(i) - t);
  }
  EXPECT_NEAR(metrics::siSdr(e, s), 10.0 * std::log10(tgt / err), 1e-10);
  EXPECT_THROW(metrics::siSdr(e, Eigen::VectorXd::Zero(500)), InvalidArgument);
  EXPECT_THROW(metrics::siSdr(e, Eigen::VectorXd::Ones(3)), InvalidArgument);
}

TEST(Metrics, EnergyMaskThreshold) {
  TfMap s = TfMap::Constant(2, 2, cplx(1.0));
  s(0, 0) = 1e-4;   // -80 dB
  s(0, 1) = 1e-3;   // -60 dB, kept
  s(1, 0) = 0.0;
  const auto m = metrics::energyMask(s);
  EXPECT_FALSE(m.e(0, 0));
  EXPECT_TRUE(m.e(0, 1));
  EXPECT_FALSE(m.e(1, 0));
  EXPECT_TRUE(m.e(1, 1));
  EXPECT_EQ(metrics::kDefaultMaskThresholdDb, -60.0);
  EXPECT_THROW(metrics::energyMask(TfMap::Zero(2, 2)), InvalidArgument);
}

TEST(Metrics, PdsAccCases) {
  Rng g(4);
  const TfMap s = testing::randomMatrix(g, 40, 30), y = s + testing::randomMatrix(g, 40, 30);
  EXPECT_EQ(metrics::pdsAcc(s, s, y), 100.0);
  // Estimate with the mixture phase: wrapped difference 0 counts as +1.
  const TfMap withMixPhase = y;
  const auto mask = metrics::energyMask(s);
  Eigen::Index pos = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (mask.e.data()[i] && testing::wrapped(std::arg(s.data()[i]) - std::arg(y.data()[i])) >= 0.0) ++pos;
  EXPECT_NEAR(metrics::pdsAcc(withMixPhase, s, y), 100.0 * static_cast<double>(pos) / static_cast<double>(mask.count()), 1e-12);
}

TEST(Metrics, PdsAccRandomPhasesIsChance) {
  Rng g(5);
  const TfMap s = testing::randomMatrix(g, 400, 257), y = s + testing::randomMatrix(g, 400, 257);
  std::uniform_real_distribution<double> u(-kPiD, kPiD);
  TfMap e(400, 257);
  for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = std::polar(1.0, u(g));
  ASSERT_GE(metrics::energyMask(s).count(), 100000);
  EXPECT_NEAR(metrics::pdsAcc(e, s, y), 50.0, 1.0);
}

TEST(Metrics, PSnrCases) {
  Rng g(6);
  const TfMap s = testing::randomMatrix(g, 30, 20);
  EXPECT_EQ(metrics::pSnr(s, s), metrics::kInf);
  EXPECT_GT(metrics::pSnr(TfMap(3.0 * s), s), 250.0);  // arg() may differ by an ulp
  RealTfMap anti = metrics::phaseOf(s).array() + kPiD;
  EXPECT_NEAR(metrics::pSnr(anti, s), 10.0 * std::log10(0.25), 1e-9);
  std::uniform_real_distribution<double> u(-kPiD, kPiD);
  for (int trial = 0; trial < 5; ++trial) {
    RealTfMap phi(30, 20);
    for (Eigen::Index i = 0; i < phi.size(); ++i) phi.data()[i] = u(g);
    EXPECT_NEAR(metrics::pSnr(phi, s), pSnrCosine(phi, s), 1e-9);
  }
  EXPECT_THROW(metrics::pSnr(RealTfMap(RealTfMap::Zero(2, 2)), s), InvalidArgument);
}

}  // namespace
}  // namespace lodistort
