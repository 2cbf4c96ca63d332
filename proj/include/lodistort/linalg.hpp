// Copyright 2026 The lodistort Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "lodistort/types.hpp"

// Small dense Hermitian kernels shared by the statistics, beamforming and
// linear-prediction layers.
namespace lodistort::linalg {

struct HermitianEigen {
  Eigen::VectorXd values;    // ascending
  Eigen::MatrixXcd vectors;  // columns, unit norm
};

inline double hermitianError(const Eigen::MatrixXcd& a) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1.0);
  return (a - a.adjoint()).cwiseAbs().maxCoeff() / scale;
}

inline Eigen::MatrixXcd symmetrize(const Eigen::MatrixXcd& a) {
  Eigen::MatrixXcd h = 0.5 * (a + a.adjoint());
  for (Eigen::Index i = 0; i < h.rows(); ++i) h(i, i) = h(i, i).real();
  return h;
}

// Cyclic complex Jacobi. Each rotation annihilates one off-diagonal pair;
// sweeps stop once the off-diagonal Frobenius mass falls below tol times
// the matrix norm.
inline HermitianEigen jacobiEigen(const Eigen::MatrixXcd& input, double tol = 1e-15,
                                  int maxSweeps = 60) {
  const Eigen::Index n = input.rows();
  detail::require(input.cols() == n, "jacobiEigen: matrix is not square");
  Eigen::MatrixXcd a = symmetrize(input);
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Identity(n, n);
  const double norm = a.norm();

  for (int sweep = 0; sweep < maxSweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) off += std::norm(a(i, j));
    if (std::sqrt(2.0 * off) <= tol * norm || norm == 0.0) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag == 0.0) continue;
        // Phase-strip a(p,q), then a real symmetric 2x2 rotation.
        const cplx phase = apq / mag;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = 0.5 * std::atan2(2.0 * mag, aqq - app);
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        // Columns p, q of the rotation G: G(p,p)=c, G(q,p)=-s*conj(phase),
        // G(p,q)=s*phase, G(q,q)=c.
        const cplx gqp = -s * std::conj(phase);
        const cplx gpq = s * phase;
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * c + akq * gqp;
          a(k, q) = akp * gpq + akq * c;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk + std::conj(gqp) * aqk;
          a(q, k) = std::conj(gpq) * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * c + vkq * gqp;
          v(k, q) = vkp * gpq + vkq * c;
        }
      }
    }
  }

  Eigen::VectorXd diag = a.diagonal().real();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return diag(x) < diag(y); });
  HermitianEigen out{Eigen::VectorXd(n), Eigen::MatrixXcd(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = diag(order[i]);
    out.vectors.col(i) = v.col(order[i]).normalized();
  }
  return out;
}

// Rotates v so that entry ref is real and nonnegative. Falls back to the
// first nonzero entry when v(ref) vanishes.
inline void fixPhase(Eigen::Ref<Eigen::VectorXcd> v, Eigen::Index ref) {
  Eigen::Index anchor = ref;
  if (std::abs(v(anchor)) == 0.0) {
    for (anchor = 0; anchor < v.size() && std::abs(v(anchor)) == 0.0; ++anchor) {
    }
    if (anchor == v.size()) return;
  }
  v *= std::conj(v(anchor)) / std::abs(v(anchor));
  v(anchor) = std::abs(v(anchor));
}

// Adds (loading * tr(A) / n) * I. A zero trace leaves A untouched.
inline Eigen::MatrixXcd loaded(const Eigen::MatrixXcd& a, double loading) {
  const double tr = a.diagonal().real().sum();
  Eigen::MatrixXcd out = a;
  out.diagonal().array() += loading * tr / static_cast<double>(a.rows());
  return out;
}

// Cholesky factor of a Hermitian matrix, or nullopt when it is not
// numerically positive definite.
inline std::optional<Eigen::LLT<Eigen::MatrixXcd>> cholesky(const Eigen::MatrixXcd& a) {
  Eigen::LLT<Eigen::MatrixXcd> llt(a);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd d = llt.matrixLLT().diagonal().real();
  if (!(d.minCoeff() > 0.0) || !d.allFinite()) return std::nullopt;
  // Pivots tiny relative to the largest signal a numerically singular matrix.
  if (d.minCoeff() < 1e-150 || d.minCoeff() / d.maxCoeff() < 1e-13) return std::nullopt;
  return llt;
}

}  // namespace lodistort::linalg
