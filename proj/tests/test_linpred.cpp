// Copyright 2026 The lodistort Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include "lodistort/linpred.hpp"
#include "lodistort/metrics.hpp"
#include "lodistort/stft.hpp"
#include "oracles.hpp"

namespace lodistort {
namespace {

using testing::Rng;

statistics::Psd constPsd(Eigen::Index t, Eigen::Index f, double v) { return {RealTfMap::Constant(t, f, v)}; }

TEST(Linpred, StackHandUnrolled) {
  Spectrogram s(3, 1, 1);
  s(0, 0, 0) = 1.0;  // a
  s(1, 0, 0) = 2.0;  // b
  s(2, 0, 0) = 3.0;  // c
  const auto st = linpred::buildDelayedStack(s, 2, 1);
  Eigen::MatrixXcd expect(3, 2);
  expect << 0.0, 0.0, 1.0, 0.0, 2.0, 1.0;
  EXPECT_EQ(st.bin(0), expect);
}

TEST(Linpred, StackIdentityWithoutDelay) {
  Rng g(1);
  const Spectrogram s = testing::randomSpectrogram(g, 6, 3, 2);
  const auto st = linpred::buildDelayedStack(s, 1, 0);
  for (Eigen::Index f = 0; f < 3; ++f) EXPECT_EQ(st.bin(f), s.frequencySlice(f));
}

TEST(Linpred, StackMatchesIndexOracle) {
  Rng g(2);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Index t = 7 + trial, f = 2 + trial % 3, p = 1 + trial % 3;
    const int k = 1 + trial, delay = trial % 4;
    const Spectrogram s = testing::randomSpectrogram(g, t, f, p);
    const auto st = linpred::buildDelayedStack(s, k, delay);
    ASSERT_EQ(st.dim(), k * p);
    for (Eigen::Index tt = 0; tt < t; ++tt)
      for (Eigen::Index ff = 0; ff < f; ++ff)
        for (Eigen::Index d = 0; d < k * p; ++d) {
          const Eigen::Index src = tt - delay - d / p;
          const cplx expect = src >= 0 ? s(src, ff, d % p) : cplx(0.0);
          EXPECT_EQ(st(tt, ff, d), expect);
        }
  }
}

TEST(Linpred, PlantedSolutionRecovered) {
  Rng g(3);
  const Spectrogram field = testing::randomSpectrogram(g, 200, 4, 2);
  const auto st = linpred::buildDelayedStack(field, 3, 1);
  const Eigen::MatrixXcd g0 = testing::randomMatrix(g, 4, st.dim());
  TfMap target(200, 4);
  for (Eigen::Index f = 0; f < 4; ++f) target.col(f) = st.bin(f) * g0.row(f).adjoint();
  std::uniform_real_distribution<double> u(0.1, 10.0);
  statistics::Psd w{RealTfMap(200, 4)};
  for (Eigen::Index i = 0; i < w.lambda.size(); ++i) w.lambda.data()[i] = u(g);
  const Eigen::MatrixXcd est = linpred::solveWeightedLp(st, target, w, 0.0);
  EXPECT_LT((est - g0).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Linpred, WeightedLpMatchesDenseOracle) {
  Rng g(4);
  const Spectrogram field = testing::randomSpectrogram(g, 60, 3, 2);
  const TfMap target = testing::randomMatrix(g, 60, 3);
  const auto st = linpred::buildDelayedStack(field, 2, 2);
  std::uniform_real_distribution<double> u(0.5, 4.0);
  statistics::Psd w{RealTfMap(60, 3)};
  for (Eigen::Index i = 0; i < w.lambda.size(); ++i) w.lambda.data()[i] = u(g);
  const Eigen::MatrixXcd est = linpred::solveWeightedLp(st, target, w, 0.0);
  for (Eigen::Index f = 0; f < 3; ++f) {
    // Whitened least squares: rows scaled by 1/sqrt(lambda).
    const Eigen::VectorXd s = w.lambda.col(f).cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXcd a = s.asDiagonal() * st.bin(f);
    const Eigen::VectorXcd b = s.asDiagonal() * target.col(f);
    const Eigen::VectorXcd ref = testing::denseLeastSquares(a, b).conjugate();
    EXPECT_LT((est.row(f).transpose() - ref).norm(), 1e-9 * ref.norm());
  }
}

TEST(Linpred, ConstantWeightsCancel) {
  Rng g(5);
  const Spectrogram field = testing::randomSpectrogram(g, 50, 3, 2);
  const TfMap target = testing::randomMatrix(g, 50, 3);
  const auto st = linpred::buildDelayedStack(field, 2, 1);
  const auto a = linpred::solveWeightedLp(st, target, constPsd(50, 3, 1.0));
  const auto b = linpred::solveWeightedLp(st, target, constPsd(50, 3, 5.0));
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Linpred, ScalarClosedForm) {
  Rng g(6);
  const Spectrogram field = testing::randomSpectrogram(g, 40, 2, 1);
  const TfMap target = testing::randomMatrix(g, 40, 2);
  const auto st = linpred::buildDelayedStack(field, 1, 1);
  statistics::Psd w{RealTfMap(40, 2)};
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (Eigen::Index i = 0; i < w.lambda.size(); ++i) w.lambda.data()[i] = u(g);
  const auto est = linpred::solveWeightedLp(st, target, w, 0.0);
  for (Eigen::Index f = 0; f < 2; ++f) {
    cplx num = 0.0;
    double den = 0.0;
    for (Eigen::Index t = 0; t < 40; ++t) {
      const cplx x = st(t, f, 0);
      num += x * std::conj(target(t, f)) / w.lambda(t, f);
      den += std::norm(x) / w.lambda(t, f);
    }
    EXPECT_LT(std::abs(est(f, 0) - num / den), 1e-12);
  }
}

TEST(Linpred, OptimalityUnderPerturbation) {
  Rng g(7);
  const Spectrogram field = testing::randomSpectrogram(g, 40, 1, 2);
  const TfMap target = testing::randomMatrix(g, 40, 1);
  const auto st = linpred::buildDelayedStack(field, 2, 1);
  const statistics::Psd w = statistics::psdFloor(target);
  const Eigen::VectorXcd best = linpred::solveWeightedLp(st, target, w).row(0).transpose();
  const auto objective = [&](const Eigen::VectorXcd& gv) {
    const Eigen::VectorXcd r = target.col(0) - st.bin(0) * gv.conjugate();
    return (r.cwiseAbs2().array() / w.lambda.col(0).array()).sum();
  };
  for (int i = 0; i < 50; ++i) EXPECT_GE(objective(best + 1e-3 * testing::randomVector(g, 4).normalized()), objective(best));
}

TEST(Linpred, Defaults) {
  EXPECT_EQ(linpred::defaultWpeTaps(1), 37);
  EXPECT_EQ(linpred::defaultWpeTaps(2), 30);
  EXPECT_EQ(linpred::defaultWpeTaps(6), 10);
  EXPECT_EQ(linpred::defaultWpeTaps(8), 8);
  EXPECT_EQ(linpred::kDefaultDelay, 3);
  EXPECT_EQ(linpred::kDefaultFcpTaps, 40);
  EXPECT_EQ(linpred::kDefaultFcpEpsilon, 1e-3);
}

TEST(Linpred, WpeAllChannelsAgreesWithSingleChannel) {
  Rng g(8);
  const Spectrogram field = testing::randomSpectrogram(g, 80, 3, 3);
  const statistics::Psd psd = statistics::psdFloor(field.channel(0));
  const auto all = linpred::wpeAllChannels(field, psd, 4, 2);
  for (int q = 0; q < 3; ++q) {
    const auto one = linpred::wpe(field, psd, 4, 2, q);
    EXPECT_LT((all.dereverbed.channel(q) - one.dereverbed).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((all.filters[q].g - one.filter.g).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Linpred, WpeRemovesPlantedReverberation) {
  const stft::StftConfig cfg;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto sc = testing::plantedScene(seed, 2, 200, 257);
    const auto out = linpred::wpe(sc.mixture, {sc.sourcePower.cwiseMax(1e-12)}, 30, 3, 0);
    const Eigen::Index n = 200 * 128 - 384;
    const TimeSignal ref = stft::synthesize(Spectrogram::fromChannel(sc.direct.channel(0)), cfg, n);
    const TimeSignal mix = stft::synthesize(Spectrogram::fromChannel(sc.mixture.channel(0)), cfg, n);
    const TimeSignal est = stft::synthesize(Spectrogram::fromChannel(out.dereverbed), cfg, n);
    EXPECT_GE(metrics::siSdr(est, ref), metrics::siSdr(mix, ref) + 5.0) << "seed " << seed;
  }
}

TEST(Linpred, WpeLeavesAnechoicSceneAlone) {
  const stft::StftConfig cfg;
  const auto sc = testing::plantedScene(9, 2, 200, 257, 3, 12, 0.0);
  const auto out = linpred::wpe(sc.mixture, statistics::psdFloor(sc.mixture.channel(0)), 30, 3, 0);
  const Eigen::Index n = 200 * 128 - 384;
  const TimeSignal ref = stft::synthesize(Spectrogram::fromChannel(sc.direct.channel(0)), cfg, n);
  const TimeSignal est = stft::synthesize(Spectrogram::fromChannel(out.dereverbed), cfg, n);
  // The mixture equals the target, so the mixture scores +inf; the output
  // must stay close.
  EXPECT_GT(metrics::siSdr(est, ref), 20.0);
  // The removed component barely correlates with the target.
  const TfMap removed = sc.mixture.channel(0) - out.dereverbed;
  const TfMap target = sc.direct.channel(0);
  const cplx corr = (removed.conjugate().cwiseProduct(target)).sum();
  EXPECT_LT(std::abs(corr) / (removed.norm() * target.norm()), 0.1);
}

TEST(Linpred, FcpIdentityAndDegenerateEstimate) {
  Rng g(10);
  const TfMap ref = testing::randomMatrix(g, 120, 3);
  const auto same = linpred::fcp(ref, ref);
  EXPECT_LT((same.dereverbed - ref).cwiseAbs().maxCoeff(), 1e-6);
  for (Eigen::Index f = 0; f < 3; ++f) {
    EXPECT_LT(std::abs(same.filter.g(f, 0) - cplx(1.0)), 1e-6);
    EXPECT_LT(same.filter.g.row(f).tail(39).cwiseAbs().maxCoeff(), 1e-6);
  }
  const auto zero = linpred::fcp(ref, TfMap::Zero(120, 3));
  EXPECT_EQ(zero.filter.g.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(zero.dereverbed, ref);
  // eta floor: relative to the peak residual.
  const double peak = ref.cwiseAbs2().maxCoeff();
  EXPECT_NEAR(zero.weights.lambda.minCoeff(), std::max(1e-3 * peak, ref.cwiseAbs2().minCoeff()), 1e-12 * peak);
}

TEST(Linpred, FcpWithOracleEstimateReducesError) {
  for (std::uint64_t seed : {4u, 5u, 6u}) {
    const auto sc = testing::plantedScene(seed, 1, 200, 64);
    const TfMap y = sc.mixture.channel(0), s = sc.direct.channel(0);
    const auto out = linpred::fcp(y, s);
    EXPECT_LT((out.dereverbed - s).norm(), (y - s).norm()) << "seed " << seed;
  }
}

TEST(Linpred, Equivariance) {
  Rng g(11);
  const Spectrogram field = testing::randomSpectrogram(g, 60, 2, 2);
  Spectrogram scaled = field;
  scaled *= 3.0;
  const auto a = linpred::wpe(field, statistics::psdFloor(field.channel(0)), 3, 1, 0);
  const auto b = linpred::wpe(scaled, statistics::psdFloor(scaled.channel(0)), 3, 1, 0);
  EXPECT_LT((b.dereverbed - 3.0 * a.dereverbed).cwiseAbs().maxCoeff(), 1e-9 * a.dereverbed.cwiseAbs().maxCoeff());
  const TfMap est = testing::randomMatrix(g, 60, 2);
  const auto c = linpred::fcp(field.channel(0), est);
  const auto d = linpred::fcp(scaled.channel(0), 3.0 * est);
  EXPECT_LT((d.dereverbed - 3.0 * c.dereverbed).cwiseAbs().maxCoeff(), 1e-9 * c.dereverbed.cwiseAbs().maxCoeff());
}

TEST(Linpred, Errors) {
  Rng g(12);
  const Spectrogram field = testing::randomSpectrogram(g, 10, 2, 2);
  EXPECT_THROW(linpred::buildDelayedStack(field, 0, 1), InvalidArgument);
  EXPECT_THROW(linpred::buildDelayedStack(field, 1, -1), InvalidArgument);
  EXPECT_THROW(linpred::wpe(field, constPsd(10, 2, 1.0), 2, 0, 0), InvalidArgument);
  EXPECT_THROW(linpred::wpe(field, constPsd(10, 3, 1.0), 2, 1, 0), InvalidArgument);
  EXPECT_THROW(linpred::wpe(field, constPsd(10, 2, 0.0), 2, 1, 0), InvalidArgument);
  EXPECT_THROW(linpred::wpe(field, constPsd(10, 2, 1.0), 2, 1, 5), InvalidArgument);
  EXPECT_THROW(linpred::fcp(field.channel(0), TfMap::Zero(9, 2)), InvalidArgument);
}

}  // namespace
}  // namespace lodistort
