#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>

#include "sketchlab/errors.hpp"
#include "sketchlab/prng.hpp"

namespace sketchlab::detail {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Largest eigenvalue of a symmetric PSD matrix by bisection on t:
// t >= lambda_max iff t*I - B is positive semidefinite (LDLT check).
inline double psd_lambda_max_bisect(const Mat& B) {
  const Index d = B.rows();
  double hi = B.trace();
  if (hi <= 0.0) return 0.0;
  double lo = 0.0;
  for (int it = 0; it < 200 && (hi - lo) > 1e-14 * std::max(1.0, hi); ++it) {
    const double t = 0.5 * (lo + hi);
    Eigen::LDLT<Mat> ldlt(Mat(t * Mat::Identity(d, d) - B));
    const bool psd = ldlt.info() == Eigen::Success && ldlt.isPositive();
    if (psd)
      hi = t;
    else
      lo = t;
  }
  return hi;
}

// Spectral norm of a symmetric matrix: power iteration on Delta^2 with a
// Rayleigh-quotient residual test, bisection fallback past the 10*d cap.
inline double sym_spectral_norm(const Mat& delta, double rel_tol = 1e-10) {
  const Index d = delta.rows();
  if (d == 0) return 0.0;
  if (d == 1) return std::abs(delta(0, 0));
  const Mat B = delta * delta;  // PSD, lambda_max = |delta|_2^2
  const double scale = B.trace();
  if (scale <= 0.0) return 0.0;
  Rng rng(0x5bec7ca1u);
  Vec v(d);
  for (Index i = 0; i < d; ++i) v[i] = rng.gaussian();
  v.normalize();
  const Index cap = 10 * d;
  for (Index it = 0; it < cap; ++it) {
    Vec w = B * v;
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    w /= nw;
    const Vec Bw = B * w;
    const double rq = w.dot(Bw);
    const double res = (Bw - rq * w).norm();
    if (res <= 0.01 * rel_tol * rel_tol * scale) return std::sqrt(rq);
    v.swap(w);
  }
  return std::sqrt(psd_lambda_max_bisect(B));
}

// Largest singular value of A by power iteration on A^T A, bisection fallback.
inline double sigma_max(const Mat& A) {
  if (A.rows() == 0 || A.cols() == 0) return 0.0;
  const Mat G = (A.rows() >= A.cols()) ? Mat(A.transpose() * A) : Mat(A * A.transpose());
  return std::sqrt(psd_lambda_max_bisect(G));
}

// Orthonormal basis of the column space of A (rank-revealing pivoted QR).
inline Mat col_space_basis(const Mat& A) {
  Eigen::ColPivHouseholderQR<Mat> qr(A);
  const Index r = qr.rank();
  Mat Q = qr.householderQ() * Mat::Identity(A.rows(), r);
  return Q;
}

// C(n, k) saturating at `cap`.
inline Index binomial_capped(Index n, Index k, Index cap) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  double acc = 1.0;
  for (Index i = 1; i <= k; ++i) {
    acc = acc * static_cast<double>(n - k + i) / static_cast<double>(i);
    if (acc > static_cast<double>(cap) * 2.0) return cap + 1;
  }
  return static_cast<Index>(std::llround(acc));
}

}  // namespace sketchlab::detail
