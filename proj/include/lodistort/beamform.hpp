// Copyright 2026 The lodistort Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <string>

#include "lodistort/linalg.hpp"
#include "lodistort/statistics.hpp"
#include "lodistort/types.hpp"

// Time-invariant per-frequency beamformers. Weights w(f) are applied as
// w(f)^H y(t,f).
namespace lodistort::beamform {

enum class BeamformerKind { mvdr, wmpdr, gev, mcwf };

inline std::string toString(BeamformerKind k) {
  switch (k) {
    case BeamformerKind::mvdr: return "mvdr";
    case BeamformerKind::wmpdr: return "wmpdr";
    case BeamformerKind::gev: return "gev";
    case BeamformerKind::mcwf: return "mcwf";
  }
  return "unknown";
}

inline constexpr double kDefaultLoading = 1e-8;

struct BeamformerWeights {
  Eigen::MatrixXcd w;  // [F x P]
  int refMic = 0;
  BeamformerKind kind = BeamformerKind::mvdr;
  // BAN post-gain folded into w for GEV; empty otherwise.
  Eigen::VectorXd postGain;
};

namespace detail {

inline NumericalError singularAt(const char* who, Eigen::Index f) {
  return NumericalError(std::string(who) + ": singular matrix at frequency bin " +
                        std::to_string(f) + " after diagonal loading");
}

// Phi^{-1} d / (d^H Phi^{-1} d) * conj(d_q)
inline Eigen::MatrixXcd distortionless(const statistics::HermitianStack& phi,
                                       const Eigen::MatrixXcd& steering, int q, double loading,
                                       const char* who) {
  const auto bins = static_cast<Eigen::Index>(phi.size());
  lodistort::detail::require(steering.rows() == bins, std::string(who) + ": steering has wrong bin count");
  const Eigen::Index p = steering.cols();
  lodistort::detail::require(q >= 0 && q < p, std::string(who) + ": reference mic out of range");
  Eigen::MatrixXcd w(bins, p);
  for (Eigen::Index f = 0; f < bins; ++f) {
    const auto& a = phi[static_cast<std::size_t>(f)];
    lodistort::detail::require(a.rows() == p && a.cols() == p,
                               std::string(who) + ": covariance is not P x P");
    const auto llt = linalg::cholesky(linalg::loaded(a, loading));
    if (!llt) throw singularAt(who, f);
    const Eigen::VectorXcd d = steering.row(f).transpose();
    const Eigen::VectorXcd num = llt->solve(d);
    const cplx den = d.dot(num);  // d^H Phi^{-1} d
    if (!(std::abs(den) > 0.0)) throw singularAt(who, f);
    w.row(f) = (num / den * std::conj(d(q))).transpose();
  }
  return w;
}

}  // namespace detail

inline BeamformerWeights mvdr(const statistics::CovarianceSet& cov, int q,
                              double loading = kDefaultLoading) {
  if (!cov.steering) throw InvalidArgument("mvdr: covariance set has no steering vector");
  return {detail::distortionless(cov.phiV, *cov.steering, q, loading, "mvdr"), q,
          BeamformerKind::mvdr, {}};
}

inline BeamformerWeights wmpdr(const statistics::HermitianStack& phiYprime,
                               const Eigen::MatrixXcd& steering, int q,
                               double loading = kDefaultLoading) {
  return {detail::distortionless(phiYprime, steering, q, loading, "wmpdr"), q,
          BeamformerKind::wmpdr, {}};
}

// Max-SNR beamformer with blind analytic normalization. The generalized
// eigenproblem phiS w = lambda phiV w is reduced to the Hermitian problem
// L^{-1} phiS L^{-H} with phiV = L L^H.
inline BeamformerWeights gevBan(const statistics::CovarianceSet& cov, int refMic = 0,
                                double loading = kDefaultLoading) {
  lodistort::detail::require(cov.phiS.size() == cov.phiV.size() && !cov.phiS.empty(),
                             "gevBan: phiS and phiV must be present with equal bin counts");
  const Eigen::Index bins = cov.bins();
  const Eigen::Index p = cov.channels();
  lodistort::detail::require(refMic >= 0 && refMic < p, "gevBan: reference mic out of range");
  BeamformerWeights out{Eigen::MatrixXcd(bins, p), refMic, BeamformerKind::gev, Eigen::VectorXd(bins)};
  for (Eigen::Index f = 0; f < bins; ++f) {
    const auto& phiS = cov.phiS[static_cast<std::size_t>(f)];
    const auto& phiV = cov.phiV[static_cast<std::size_t>(f)];
    const auto llt = linalg::cholesky(linalg::loaded(phiV, loading));
    if (!llt) throw detail::singularAt("gevBan", f);
    const Eigen::MatrixXcd l = llt->matrixL();
    const Eigen::MatrixXcd linvS = l.triangularView<Eigen::Lower>().solve(phiS);
    const Eigen::MatrixXcd c =
        l.triangularView<Eigen::Lower>().solve(linvS.adjoint()).adjoint();  // L^-1 S L^-H
    const auto eig = linalg::jacobiEigen(c);
    Eigen::VectorXcd w = l.adjoint().triangularView<Eigen::Upper>().solve(eig.vectors.col(p - 1));
    w.normalize();
    linalg::fixPhase(w, refMic);

    const Eigen::VectorXcd vw = phiV * w;
    const double num = vw.squaredNorm() / static_cast<double>(p);  // w^H V V w / P
    const double den = w.dot(vw).real();                           // w^H V w
    const double gain = den > 0.0 ? std::sqrt(num) / den : 0.0;
    out.postGain(f) = gain;
    out.w.row(f) = (gain * w).transpose();
  }
  return out;
}

// Unconstrained least squares: argmin_w sum_t |target - w^H z|^2, solved
// from the (relatively loaded) normal equations.
inline BeamformerWeights mcwf(const Spectrogram& inputField, const TfMap& targetQ, int refMic = 0,
                              double loading = kDefaultLoading) {
  lodistort::detail::require(targetQ.rows() == inputField.frames() && targetQ.cols() == inputField.bins(),
                             "mcwf: target shape does not match input " + inputField.shapeString());
  const Eigen::Index p = inputField.channels();
  BeamformerWeights out{Eigen::MatrixXcd(inputField.bins(), p), refMic, BeamformerKind::mcwf, {}};
  for (Eigen::Index f = 0; f < inputField.bins(); ++f) {
    const Eigen::MatrixXcd z = inputField.frequencySlice(f);
    const Eigen::MatrixXcd gram = linalg::symmetrize(z.transpose() * z.conjugate());
    const Eigen::VectorXcd rhs = z.transpose() * targetQ.col(f).conjugate();
    if (gram.diagonal().real().sum() == 0.0) {
      out.w.row(f).setZero();
      continue;
    }
    const auto llt = linalg::cholesky(linalg::loaded(gram, loading));
    if (!llt) throw detail::singularAt("mcwf", f);
    out.w.row(f) = llt->solve(rhs).transpose();
  }
  return out;
}

inline TfMap applyBeamformer(const BeamformerWeights& w, const Spectrogram& field) {
  if (w.w.rows() != field.bins() || w.w.cols() != field.channels())
    throw InvalidArgument("applyBeamformer: weights [F=" + std::to_string(w.w.rows()) + ", P=" +
                          std::to_string(w.w.cols()) + "] do not match field " + field.shapeString());
  TfMap out(field.frames(), field.bins());
  for (Eigen::Index f = 0; f < field.bins(); ++f) {
    const Eigen::VectorXcd wf = w.w.row(f).transpose();
    out.col(f) = field.frequencySlice(f) * wf.conjugate();
  }
  return out;
}

}  // namespace lodistort::beamform
