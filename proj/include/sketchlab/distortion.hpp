#pragma once

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "sketchlab/detail/linalg.hpp"
#include "sketchlab/set_geometry.hpp"
#include "sketchlab/sketch_core.hpp"

namespace sketchlab {

enum class DistortionMethod { kExactSpectral, kExactEnumeration, kExactFinite, kMonteCarlo };

inline std::string to_string(DistortionMethod m) {
  switch (m) {
    case DistortionMethod::kExactSpectral: return "exact_spectral";
    case DistortionMethod::kExactEnumeration: return "exact_enumeration";
    case DistortionMethod::kExactFinite: return "exact_finite";
    default: return "monte_carlo";
  }
}

struct DistortionReport {
  double epsilon = 0.0;
  DistortionMethod method = DistortionMethod::kExactFinite;
  Index samples = 0;
  std::optional<double> delta_diameter;
  double wall_time_s = 0.0;
};

// Default cap on the number of k-subsets enumerated; override with the
// SKETCHLAB_MAX_ENUM environment variable or an explicit budget argument.
inline Index enumeration_budget() {
  if (const char* env = std::getenv("SKETCHLAB_MAX_ENUM")) {
    const long long v = std::atoll(env);
    if (v > 0) return static_cast<Index>(v);
  }
  return 1000000;
}

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

// Exact restricted isometry constant over a finite point set.
inline DistortionReport distortion_finite(const SketchOperator& op, const FiniteSet& T) {
  detail::Stopwatch sw;
  if (T.points.rows() != op.cols())
    throw DimensionMismatch("distortion_finite: ambient dimension mismatch");
  double eps = 0.0;
  for (Index c = 0; c < T.points.cols(); ++c)
    eps = std::max(eps, std::abs(op.apply(T.points.col(c)).squaredNorm() - 1.0));
  DistortionReport rep;
  rep.epsilon = eps;
  rep.method = DistortionMethod::kExactFinite;
  rep.samples = T.points.cols();
  rep.wall_time_s = sw.seconds();
  return rep;
}

// Exact constant on the unit sphere of a subspace: spectral norm of
// (Phi U)^T (Phi U) - I.
inline DistortionReport distortion_subspace(const SketchOperator& op, const Subspace& T) {
  detail::Stopwatch sw;
  if (T.basis.rows() != op.cols())
    throw DimensionMismatch("distortion_subspace: ambient dimension mismatch");
  const Mat B = op.apply_matrix(T.basis);
  const Mat delta = B.transpose() * B - Mat::Identity(T.basis.cols(), T.basis.cols());
  DistortionReport rep;
  rep.epsilon = detail::sym_spectral_norm(delta);
  rep.method = DistortionMethod::kExactSpectral;
  rep.wall_time_s = sw.seconds();
  return rep;
}

// Exact constant over all k-sparse unit vectors (in dictionary coordinates)
// by colexicographic enumeration of supports.
inline DistortionReport distortion_ksparse_enum(const SketchOperator& op, const KSparseCap& T,
                                                Index budget = -1) {
  detail::Stopwatch sw;
  if (T.n != op.cols())
    throw DimensionMismatch("distortion_ksparse_enum: ambient dimension mismatch");
  if (budget < 0) budget = enumeration_budget();
  const Index count = detail::binomial_capped(T.n, T.k, budget);
  if (count > budget)
    throw BudgetExceeded("distortion_ksparse_enum: C(n,k) exceeds budget " +
                         std::to_string(budget));

  // Sketch each dictionary column once; supports reuse these columns.
  Mat cols(op.rows(), T.n);
  if (T.dictionary) {
    cols = op.apply_matrix(*T.dictionary);
  } else {
    Vec e = Vec::Zero(T.n);
    for (Index j = 0; j < T.n; ++j) {
      e[j] = 1.0;
      cols.col(j) = op.apply(e);
      e[j] = 0.0;
    }
  }

  std::vector<Index> supp(static_cast<std::size_t>(T.k));
  for (Index i = 0; i < T.k; ++i) supp[static_cast<std::size_t>(i)] = i;
  Mat M(op.rows(), T.k);
  double eps = 0.0;
  Index visited = 0;
  for (;;) {
    for (Index i = 0; i < T.k; ++i) M.col(i) = cols.col(supp[static_cast<std::size_t>(i)]);
    const Mat delta = M.transpose() * M - Mat::Identity(T.k, T.k);
    eps = std::max(eps, detail::sym_spectral_norm(delta));
    ++visited;
    // next support in colexicographic order
    Index i = 0;
    while (i + 1 < T.k && supp[static_cast<std::size_t>(i)] + 1 == supp[static_cast<std::size_t>(i + 1)]) ++i;
    if (supp[static_cast<std::size_t>(i)] + 1 >= T.n && i + 1 == T.k) break;
    ++supp[static_cast<std::size_t>(i)];
    for (Index r = 0; r < i; ++r) supp[static_cast<std::size_t>(r)] = r;
  }
  DistortionReport rep;
  rep.epsilon = eps;
  rep.method = DistortionMethod::kExactEnumeration;
  rep.samples = visited;
  rep.wall_time_s = sw.seconds();
  return rep;
}

// Sampled lower estimate of the restricted isometry constant; always a
// sup over a subset of T, so never exceeds the matching exact value.
inline DistortionReport distortion_mc(const SketchOperator& op, const SetDescriptor& T,
                                      Index samples, std::uint64_t seed) {
  detail::Stopwatch sw;
  if (samples <= 0) throw InsufficientSamples("distortion_mc: samples >= 1 required");
  if (ambient_dim(T) != op.cols())
    throw DimensionMismatch("distortion_mc: ambient dimension mismatch");
  double eps = 0.0;
  for (Index t = 0; t < samples; ++t) {
    Rng rng(substream(seed, static_cast<std::uint64_t>(t)));
    const Vec x = sample_direction(T, rng);
    eps = std::max(eps, std::abs(op.apply(x).squaredNorm() - 1.0));
  }
  DistortionReport rep;
  rep.epsilon = eps;
  rep.method = DistortionMethod::kMonteCarlo;
  rep.samples = samples;
  rep.wall_time_s = sw.seconds();
  return rep;
}

// max_i (sum_j delta_ij x_j^2)^{1/2} / sqrt(s); always <= |x|_2 / sqrt(s).
inline double delta_norm(const SjltOperator& op, const Vec& x) {
  if (x.size() != op.cols()) throw DimensionMismatch("delta_norm: vector length mismatch");
  Vec rowsum = Vec::Zero(op.rows());
  for (Index j = 0; j < op.cols(); ++j) {
    const double xsq = x[j] * x[j];
    if (xsq == 0.0) continue;
    for (Index t = 0; t < op.sparsity(); ++t) rowsum[op.row_index(j, t)] += xsq;
  }
  return std::sqrt(rowsum.maxCoeff()) / std::sqrt(static_cast<double>(op.sparsity()));
}

inline double delta_norm(const DenseSignOperator& op, const Vec& x) {
  if (x.size() != op.cols()) throw DimensionMismatch("delta_norm: vector length mismatch");
  return x.norm() / std::sqrt(static_cast<double>(op.rows()));
}

// Sampled sup of the delta norm over T (same sampling rule as distortion_mc).
inline double delta_diameter(const SjltOperator& op, const SetDescriptor& T,
                             Index samples, std::uint64_t seed) {
  if (samples <= 0) throw InsufficientSamples("delta_diameter: samples >= 1 required");
  if (ambient_dim(T) != op.cols())
    throw DimensionMismatch("delta_diameter: ambient dimension mismatch");
  double d = 0.0;
  for (Index t = 0; t < samples; ++t) {
    Rng rng(substream(seed, static_cast<std::uint64_t>(t)));
    d = std::max(d, delta_norm(op, sample_direction(T, rng)));
  }
  return d;
}

// Exact method where the descriptor permits, Monte Carlo fallback otherwise.
inline DistortionReport distortion_auto(const SketchOperator& op, const SetDescriptor& T,
                                        Index mc_samples, std::uint64_t seed) {
  if (const auto* f = std::get_if<FiniteSet>(&T)) return distortion_finite(op, *f);
  if (const auto* s = std::get_if<Subspace>(&T)) return distortion_subspace(op, *s);
  if (const auto* k = std::get_if<KSparseCap>(&T)) {
    try {
      return distortion_ksparse_enum(op, *k);
    } catch (const BudgetExceeded&) {
      return distortion_mc(op, T, mc_samples, seed);
    }
  }
  return distortion_mc(op, T, mc_samples, seed);
}

}  // namespace sketchlab
