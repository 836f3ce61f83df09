#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <variant>
#include <vector>

#include "sketchlab/detail/linalg.hpp"
#include "sketchlab/errors.hpp"
#include "sketchlab/prng.hpp"
#include "sketchlab/sketch_core.hpp"

namespace sketchlab {

namespace detail {
inline void check_orthonormal_columns(const Mat& U, const char* what) {
  const Mat G = U.transpose() * U - Mat::Identity(U.cols(), U.cols());
  if (G.cwiseAbs().maxCoeff() > 1e-10)
    throw NotOrthonormal(std::string(what) + ": columns not orthonormal to 1e-10");
}
inline void check_orthogonal_square(const Mat& H, const char* what) {
  if (H.rows() != H.cols())
    throw NotOrthonormal(std::string(what) + ": matrix must be square");
  check_orthonormal_columns(H, what);
}
}  // namespace detail

// Finite point set on the unit sphere, one point per column. Points with
// |x|_2 within 1e-6 of 1 are renormalized on ingest, anything else is rejected.
struct FiniteSet {
  Mat points;

  explicit FiniteSet(Mat pts) : points(std::move(pts)) {
    if (points.cols() == 0 || points.rows() == 0)
      throw ZeroDimension("finite set: needs at least one point");
    for (Index c = 0; c < points.cols(); ++c) {
      const double nrm = points.col(c).norm();
      if (nrm < 1.0 - 1e-6 || nrm > 1.0 + 1e-6)
        throw NotUnitNorm("finite set: point " + std::to_string(c) +
                          " has norm " + std::to_string(nrm));
      points.col(c) /= nrm;
    }
  }
};

// Unit sphere of the column space of an orthonormal basis U (n x d).
struct Subspace {
  Mat basis;

  explicit Subspace(Mat U) : basis(std::move(U)) {
    if (basis.rows() == 0 || basis.cols() == 0)
      throw ZeroDimension("subspace: empty basis");
    if (basis.cols() > basis.rows())
      throw BadDimension("subspace: more basis vectors than ambient dimension");
    detail::check_orthonormal_columns(basis, "subspace");
  }
};

// k-sparse unit vectors, optionally pushed through an orthogonal dictionary H.
struct KSparseCap {
  Index n, k;
  std::optional<Mat> dictionary;

  KSparseCap(Index n_, Index k_, std::optional<Mat> H = std::nullopt)
      : n(n_), k(k_), dictionary(std::move(H)) {
    if (n <= 0) throw ZeroDimension("ksparse: n must be positive");
    if (k <= 0 || k > n)
      throw BadDimension("ksparse: need 1 <= k <= n, got k=" + std::to_string(k));
    if (dictionary) {
      if (dictionary->rows() != n)
        throw DimensionMismatch("ksparse: dictionary must be n x n");
      detail::check_orthogonal_square(*dictionary, "ksparse dictionary");
    }
  }
};

struct UnionOfSubspaces {
  std::vector<Mat> bases;

  explicit UnionOfSubspaces(std::vector<Mat> bs) : bases(std::move(bs)) {
    if (bases.empty()) throw ZeroDimension("union: needs at least one subspace");
    for (const auto& U : bases) {
      if (U.rows() != bases.front().rows())
        throw DimensionMismatch("union: members have different ambient dimensions");
      detail::check_orthonormal_columns(U, "union member");
    }
  }
};

using SetDescriptor = std::variant<FiniteSet, Subspace, KSparseCap, UnionOfSubspaces>;

inline Index ambient_dim(const SetDescriptor& T) {
  return std::visit(
      [](const auto& t) -> Index {
        using V = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<V, FiniteSet>) return t.points.rows();
        else if constexpr (std::is_same_v<V, Subspace>) return t.basis.rows();
        else if constexpr (std::is_same_v<V, KSparseCap>) return t.n;
        else return t.bases.front().rows();
      },
      T);
}

namespace detail {
// l2 norm of the k largest-magnitude entries of w.
inline double top_k_norm(const Vec& w, Index k) {
  std::vector<double> mags(static_cast<std::size_t>(w.size()));
  for (Index i = 0; i < w.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(w[i]);
  std::nth_element(mags.begin(), mags.begin() + (k - 1), mags.end(),
                   std::greater<double>());
  double ss = 0.0;
  for (Index i = 0; i < k; ++i) ss += mags[static_cast<std::size_t>(i)] * mags[static_cast<std::size_t>(i)];
  return std::sqrt(ss);
}
}  // namespace detail

// Exact value of sup over x in T of |<z, x>|; a seminorm in z.
inline double sup_inner_product(const SetDescriptor& T, const Vec& z) {
  if (z.size() != ambient_dim(T))
    throw DimensionMismatch("sup_inner_product: vector length mismatch");
  return std::visit(
      [&z](const auto& t) -> double {
        using V = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<V, FiniteSet>) {
          return (t.points.transpose() * z).cwiseAbs().maxCoeff();
        } else if constexpr (std::is_same_v<V, Subspace>) {
          return (t.basis.transpose() * z).norm();
        } else if constexpr (std::is_same_v<V, KSparseCap>) {
          const Vec w = t.dictionary ? Vec(t.dictionary->transpose() * z) : z;
          return detail::top_k_norm(w, t.k);
        } else {
          double best = 0.0;
          for (const auto& U : t.bases)
            best = std::max(best, (U.transpose() * z).norm());
          return best;
        }
      },
      T);
}

// Row norms of an orthonormal basis: coordinate-wise projection norms.
inline Vec leverage_scores(const Mat& U) {
  detail::check_orthonormal_columns(U, "leverage_scores");
  return U.rowwise().norm();
}

inline double incoherence(const Mat& U) { return leverage_scores(U).maxCoeff(); }

// Uniform direction sample from T (unit norm member).
inline Vec sample_direction(const SetDescriptor& T, Rng& rng) {
  return std::visit(
      [&rng](const auto& t) -> Vec {
        using V = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<V, FiniteSet>) {
          return t.points.col(static_cast<Index>(rng.below(static_cast<std::uint64_t>(t.points.cols()))));
        } else if constexpr (std::is_same_v<V, Subspace>) {
          Vec c(t.basis.cols());
          for (Index i = 0; i < c.size(); ++i) c[i] = rng.gaussian();
          c /= c.norm();
          return t.basis * c;
        } else if constexpr (std::is_same_v<V, KSparseCap>) {
          // uniform support via partial Fisher-Yates, Gaussian coefficients
          std::vector<Index> idx(static_cast<std::size_t>(t.n));
          for (Index i = 0; i < t.n; ++i) idx[static_cast<std::size_t>(i)] = i;
          for (Index p = 0; p < t.k; ++p) {
            const Index q = p + static_cast<Index>(rng.below(static_cast<std::uint64_t>(t.n - p)));
            std::swap(idx[static_cast<std::size_t>(p)], idx[static_cast<std::size_t>(q)]);
          }
          Vec c(t.k);
          for (Index i = 0; i < t.k; ++i) c[i] = rng.gaussian();
          c /= c.norm();
          Vec x = Vec::Zero(t.n);
          for (Index i = 0; i < t.k; ++i) x[idx[static_cast<std::size_t>(i)]] = c[i];
          return t.dictionary ? Vec(*t.dictionary * x) : x;
        } else {
          const auto& U = t.bases[rng.below(t.bases.size())];
          Vec c(U.cols());
          for (Index i = 0; i < c.size(); ++i) c[i] = rng.gaussian();
          c /= c.norm();
          return U * c;
        }
      },
      T);
}

struct McEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  Index samples = 0;
};

// Monte Carlo Gaussian mean width E sup_{x in T} |<g, x>|. For the
// symmetric families handled here this equals the usual one-sided width.
inline McEstimate gaussian_width_mc(const SetDescriptor& T, Index samples,
                                    std::uint64_t seed) {
  if (samples < 2) throw InsufficientSamples("gaussian_width_mc: samples >= 2");
  const Index n = ambient_dim(T);
  double sum = 0.0, sumsq = 0.0;
  Vec g(n);
  for (Index t = 0; t < samples; ++t) {
    Rng rng(substream(seed, static_cast<std::uint64_t>(t)));
    for (Index i = 0; i < n; ++i) g[i] = rng.gaussian();
    const double v = sup_inner_product(T, g);
    sum += v;
    sumsq += v * v;
  }
  McEstimate out;
  out.samples = samples;
  out.value = sum / static_cast<double>(samples);
  const double var = std::max(
      0.0, (sumsq - sum * sum / static_cast<double>(samples)) / static_cast<double>(samples - 1));
  out.standard_error = std::sqrt(var / static_cast<double>(samples));
  return out;
}

struct GeometryReport {
  double gaussian_width = 0.0;
  double gaussian_width_se = 0.0;
  double kappa = 0.0;
  std::vector<double> q_grid;
  std::vector<double> kappa_by_q;
  std::vector<double> se_by_q;
  Index outer_samples = 0;
  Index inner_samples = 0;
  Index width_samples = 0;
};

// Geometric grid 1, 2, 4, ... ending at the exact top moment (m/s) log s.
// The top value is kept un-rounded so the all-ones mask (p = 1) is reachable.
inline std::vector<double> default_q_grid(Index m, Index s, int max_points = 12) {
  if (s < 2) throw QOutOfRange("q grid: s >= 2 required so that log s > 0");
  const double q_top = (static_cast<double>(m) / static_cast<double>(s)) *
                       std::log(static_cast<double>(s));
  if (q_top < 1.0) throw QOutOfRange("q grid: (m/s) log s < 1, no admissible q");
  std::vector<double> grid;
  for (double q = 1.0; q < q_top && static_cast<int>(grid.size()) + 1 < max_points; q *= 2.0)
    grid.push_back(q);
  grid.push_back(q_top);
  return grid;
}

// Masked-Gaussian moment complexity: for each q, eta is an i.i.d. Bernoulli
// mask of mean q s / (m log s); the inner Gaussian expectation of
// sup_{x in T} |<eta g, x>| is averaged over `inner` draws, the empirical
// q-th moment is taken over `outer` masks, and the report carries the max
// over the grid together with per-q standard errors (delta method).
inline GeometryReport kappa_mc(const SetDescriptor& T, Index m, Index s,
                               const std::vector<double>& q_grid, Index outer,
                               Index inner, std::uint64_t seed) {
  if (s < 2) throw QOutOfRange("kappa_mc: s >= 2 required so that log s > 0");
  if (m < 1) throw ZeroDimension("kappa_mc: m >= 1 required");
  const double q_top = (static_cast<double>(m) / static_cast<double>(s)) *
                       std::log(static_cast<double>(s));
  if (q_grid.empty()) throw QOutOfRange("kappa_mc: empty q grid");
  double q_max = 0.0;
  for (double q : q_grid) {
    if (q < 1.0 || q > q_top * (1.0 + 1e-12))
      throw QOutOfRange("kappa_mc: q " + std::to_string(q) +
                        " outside [1, (m/s) log s]");
    q_max = std::max(q_max, q);
  }
  if (inner < 100) throw InsufficientSamples("kappa_mc: inner samples >= 100");
  if (static_cast<double>(outer) < 10.0 * q_max)
    throw InsufficientSamples("kappa_mc: outer samples >= 10 * max q");

  const Index n = ambient_dim(T);
  GeometryReport rep;
  rep.q_grid = q_grid;
  rep.outer_samples = outer;
  rep.inner_samples = inner;

  Vec gz(n);
  std::vector<char> mask(static_cast<std::size_t>(n));
  for (std::size_t qi = 0; qi < q_grid.size(); ++qi) {
    const double q = q_grid[qi];
    const double p = std::min(1.0, q * static_cast<double>(s) /
                                       (static_cast<double>(m) * std::log(static_cast<double>(s))));
    double msum = 0.0, msumsq = 0.0;
    for (Index t = 0; t < outer; ++t) {
      Rng rng(substream(seed, (static_cast<std::uint64_t>(qi) << 40) ^ static_cast<std::uint64_t>(t)));
      bool any = false;
      for (Index i = 0; i < n; ++i) {
        mask[static_cast<std::size_t>(i)] = (p >= 1.0) || (rng.uniform() < p);
        any = any || mask[static_cast<std::size_t>(i)];
      }
      double isum = 0.0;
      if (any) {
        for (Index r = 0; r < inner; ++r) {
          for (Index i = 0; i < n; ++i)
            gz[i] = mask[static_cast<std::size_t>(i)] ? rng.gaussian() : 0.0;
          isum += sup_inner_product(T, gz);
        }
      }
      const double inner_mean = isum / static_cast<double>(inner);
      const double powq = std::pow(inner_mean, q);
      msum += powq;
      msumsq += powq * powq;
    }
    const double mq = msum / static_cast<double>(outer);
    const double mq_var = std::max(
        0.0, (msumsq - msum * msum / static_cast<double>(outer)) / static_cast<double>(outer - 1));
    const double mq_se = std::sqrt(mq_var / static_cast<double>(outer));
    const double scale = 1.0 / std::sqrt(q * static_cast<double>(s));
    const double kq = scale * (mq > 0.0 ? std::pow(mq, 1.0 / q) : 0.0);
    const double kq_se =
        (mq > 0.0) ? scale * std::pow(mq, 1.0 / q - 1.0) * mq_se / q : 0.0;
    rep.kappa_by_q.push_back(kq);
    rep.se_by_q.push_back(kq_se);
    rep.kappa = std::max(rep.kappa, kq);
  }

  rep.width_samples = std::max<Index>(outer, 1000);
  const auto gw = gaussian_width_mc(T, rep.width_samples, substream(seed, 0xA11CE));
  rep.gaussian_width = gw.value;
  rep.gaussian_width_se = gw.standard_error;
  return rep;
}

inline GeometryReport kappa_mc(const SetDescriptor& T, Index m, Index s,
                               Index outer, Index inner, std::uint64_t seed) {
  return kappa_mc(T, m, s, default_q_grid(m, s), outer, inner, seed);
}

}  // namespace sketchlab
