#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sketchlab/detail/linalg.hpp"
#include "sketchlab/errors.hpp"
#include "sketchlab/prng.hpp"
#include "sketchlab/sketch_core.hpp"

namespace sketchlab {

struct Unconstrained {};
struct L1Ball {
  double radius;
};
struct L21Ball {
  Index blocks;
  Index block_dim;
  double radius;
};
using Constraint = std::variant<Unconstrained, L1Ball, L21Ball>;

struct LsProblem {
  Mat A;
  Vec b;
  Constraint constraint = Unconstrained{};

  void validate() const {
    if (A.rows() == 0 || A.cols() == 0) throw ZeroDimension("lsq: empty matrix");
    if (b.size() != A.rows())
      throw DimensionMismatch("lsq: rhs length " + std::to_string(b.size()) +
                              " != matrix rows " + std::to_string(A.rows()));
    if (const auto* l1 = std::get_if<L1Ball>(&constraint)) {
      if (l1->radius <= 0.0) throw BadConfig("lsq: l1 radius must be positive");
    } else if (const auto* l21 = std::get_if<L21Ball>(&constraint)) {
      if (l21->radius <= 0.0) throw BadConfig("lsq: l21 radius must be positive");
      if (l21->blocks <= 0 || l21->block_dim <= 0 ||
          l21->blocks * l21->block_dim != A.cols())
        throw BadBlockStructure("lsq: need cols = blocks * block_dim");
    }
  }
};

// Euclidean projection onto the l1 ball of radius R (sort-based soft threshold).
inline Vec project_l1(const Vec& x, double R) {
  if (R <= 0.0) throw BadConfig("project_l1: radius must be positive");
  if (x.lpNorm<1>() <= R) return x;
  const Index d = x.size();
  std::vector<double> mags(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) mags[static_cast<std::size_t>(i)] = std::abs(x[i]);
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  double cumsum = 0.0, tau = 0.0;
  for (Index i = 0; i < d; ++i) {
    cumsum += mags[static_cast<std::size_t>(i)];
    const double cand = (cumsum - R) / static_cast<double>(i + 1);
    if (i + 1 == d || mags[static_cast<std::size_t>(i + 1)] <= cand) {
      tau = cand;
      break;
    }
  }
  Vec y(d);
  for (Index i = 0; i < d; ++i) {
    const double m = std::abs(x[i]) - tau;
    y[i] = m > 0.0 ? (x[i] > 0.0 ? m : -m) : 0.0;
  }
  return y;
}

// Projection onto the l2,1 ball: l1-project the vector of block norms, then
// rescale each block accordingly.
inline Vec project_l21(const Vec& x, Index blocks, Index block_dim, double R) {
  if (blocks <= 0 || block_dim <= 0 || blocks * block_dim != x.size())
    throw BadBlockStructure("project_l21: need len = blocks * block_dim");
  Vec w(blocks);
  for (Index l = 0; l < blocks; ++l) w[l] = x.segment(l * block_dim, block_dim).norm();
  if (w.sum() <= R) return x;
  const Vec v = project_l1(w, R);
  Vec y = Vec::Zero(x.size());
  for (Index l = 0; l < blocks; ++l)
    if (w[l] > 0.0) y.segment(l * block_dim, block_dim) = x.segment(l * block_dim, block_dim) * (v[l] / w[l]);
  return y;
}

inline Vec project_onto(const Constraint& c, const Vec& x) {
  if (const auto* l1 = std::get_if<L1Ball>(&c)) return project_l1(x, l1->radius);
  if (const auto* l21 = std::get_if<L21Ball>(&c))
    return project_l21(x, l21->blocks, l21->block_dim, l21->radius);
  return x;
}

struct ExactSolution {
  Vec x;
  double f = 0.0;
  Index iterations = 0;
};

// Unconstrained: least-norm solution via rank-revealing orthogonal
// factorization. Constrained: projected gradient descent with fixed step
// 1/L, L the largest squared singular value of A, stopping when the gradient
// mapping norm falls below tol * (1 + |A^T b|_inf).
inline ExactSolution solve_exact(const LsProblem& p, double tol = 1e-10) {
  p.validate();
  ExactSolution out;
  if (std::holds_alternative<Unconstrained>(p.constraint)) {
    out.x = p.A.completeOrthogonalDecomposition().solve(p.b);
    out.f = (p.A * out.x - p.b).squaredNorm();
    return out;
  }
  const Index d = p.A.cols();
  const double smax = detail::sigma_max(p.A);
  const double L = std::max(smax * smax, std::numeric_limits<double>::min());
  const double scale = 1.0 + (p.A.transpose() * p.b).cwiseAbs().maxCoeff();
  const Index cap = 50 * d * static_cast<Index>(std::ceil(std::log(1.0 / tol)));
  Vec x = Vec::Zero(d);
  for (Index it = 0; it < cap; ++it) {
    const Vec grad = p.A.transpose() * (p.A * x - p.b);
    const Vec xn = project_onto(p.constraint, x - grad / L);
    const double pg = L * (x - xn).norm();
    x = xn;
    if (pg <= tol * scale) {
      out.x = x;
      out.f = (p.A * x - p.b).squaredNorm();
      out.iterations = it + 1;
      return out;
    }
  }
  throw NonConvergence("solve_exact: projected gradient did not converge in " +
                       std::to_string(cap) + " iterations");
}

enum class CertMethod { kNone, kExact, kMonteCarlo };

struct ZCertificates {
  double z1 = 0.0;
  double z2 = 0.0;
  CertMethod method = CertMethod::kExact;
  bool one_sided = false;  // true when z1 is only an upper bound on the inf
  Index samples = 0;
};

// Exact certificates for the unconstrained tangent cone: z1 is the smallest
// eigenvalue of (Phi U)^T (Phi U) for U an orthonormal basis of Col(A), z2 is
// |(Phi U)^T Phi u|_2 with u the normalized residual (U^T u = 0 at the
// global minimizer).
inline ZCertificates z_certificates_unconstrained(const LsProblem& p, const SketchOperator& op) {
  p.validate();
  if (op.cols() != p.A.rows())
    throw DimensionMismatch("z_certificates: sketch acts on R^n");
  LsProblem q{p.A, p.b, Unconstrained{}};
  const ExactSolution ex = solve_exact(q);
  if (ex.f <= 1e-12) throw ZeroResidual("z_certificates: exact residual is zero");
  const Vec r = p.A * ex.x - p.b;
  const Vec u = r / r.norm();
  const Mat U = detail::col_space_basis(p.A);
  const Mat B = op.apply_matrix(U);
  const Mat G = B.transpose() * B;
  Eigen::SelfAdjointEigenSolver<Mat> es(G);
  ZCertificates z;
  z.z1 = es.eigenvalues().minCoeff();
  z.z2 = (B.transpose() * op.apply(u)).norm();
  z.method = CertMethod::kExact;
  return z;
}

namespace detail {

// Uniform draw from the l1 ball of radius R in R^d.
inline Vec sample_l1_ball(Index d, double R, Rng& rng) {
  Vec y(d);
  double nrm = 0.0;
  for (Index i = 0; i < d; ++i) {
    const double e = -std::log(rng.uniform_pos());
    y[i] = rng.sign_bit() ? -e : e;
    nrm += e;
  }
  const double u = rng.uniform_pos();
  return y * (R * std::pow(u, 1.0 / static_cast<double>(d)) / nrm);
}

// Draw from the l2,1 ball: block magnitudes from the l1-ball law in R^b,
// uniform directions within blocks.
inline Vec sample_l21_ball(Index blocks, Index block_dim, double R, Rng& rng) {
  const Vec w = sample_l1_ball(blocks, R, rng).cwiseAbs();
  Vec y(blocks * block_dim);
  for (Index l = 0; l < blocks; ++l) {
    Vec dir(block_dim);
    for (Index i = 0; i < block_dim; ++i) dir[i] = rng.gaussian();
    const double nd = dir.norm();
    y.segment(l * block_dim, block_dim) = (nd > 0.0) ? Vec(dir * (w[l] / nd)) : Vec::Zero(block_dim);
  }
  return y;
}

inline bool constraint_active(const Constraint& c, const Vec& x, double rel = 1e-9) {
  if (const auto* l1 = std::get_if<L1Ball>(&c)) return x.lpNorm<1>() >= l1->radius * (1.0 - rel);
  if (const auto* l21 = std::get_if<L21Ball>(&c)) {
    double nrm = 0.0;
    for (Index l = 0; l < l21->blocks; ++l)
      nrm += x.segment(l * l21->block_dim, l21->block_dim).norm();
    return nrm >= l21->radius * (1.0 - rel);
  }
  return false;
}

}  // namespace detail

// One-sided sampled surrogates for the cone-restricted quantities: an upper
// bound on the inf behind Z1 and a lower bound on the sup behind Z2, over
// directions y - x_star with y drawn in C. Falls back to the exact
// unconstrained certificates when the constraint is inactive at x_star.
inline ZCertificates z_certificates_cone_mc(const LsProblem& p, const SketchOperator& op,
                                            const Vec& x_star, Index samples,
                                            std::uint64_t seed) {
  p.validate();
  if (std::holds_alternative<Unconstrained>(p.constraint) ||
      !detail::constraint_active(p.constraint, x_star))
    return z_certificates_unconstrained(p, op);
  if (samples <= 0) throw InsufficientSamples("z_certificates_cone_mc: samples >= 1");

  const Vec r = p.A * x_star - p.b;
  const double fr = r.squaredNorm();
  if (fr <= 1e-12) throw ZeroResidual("z_certificates_cone_mc: exact residual is zero");
  const Vec u = r / r.norm();
  const Vec phi_u = op.apply(u);

  ZCertificates z;
  z.method = CertMethod::kMonteCarlo;
  z.one_sided = true;
  z.z1 = std::numeric_limits<double>::infinity();
  z.z2 = 0.0;
  Index used = 0;
  for (Index t = 0; t < samples; ++t) {
    Rng rng(substream(seed, static_cast<std::uint64_t>(t)));
    Vec y;
    if (const auto* l1 = std::get_if<L1Ball>(&p.constraint))
      y = detail::sample_l1_ball(p.A.cols(), l1->radius, rng);
    else {
      const auto& l21 = std::get<L21Ball>(p.constraint);
      y = detail::sample_l21_ball(l21.blocks, l21.block_dim, l21.radius, rng);
    }
    const Vec dir = y - x_star;
    Vec v = p.A * dir;
    const double nv = v.norm();
    if (nv <= 1e-14 * (1.0 + x_star.norm())) continue;
    v /= nv;
    const Vec phi_v = op.apply(v);
    z.z1 = std::min(z.z1, phi_v.squaredNorm());
    z.z2 = std::max(z.z2, std::abs(phi_u.dot(phi_v) - u.dot(v)));
    ++used;
  }
  if (used == 0) throw InsufficientSamples("z_certificates_cone_mc: no usable directions");
  z.samples = used;
  return z;
}

struct SolveReport {
  Vec x_star;
  Vec x_hat;
  double f_star = 0.0;
  double f_hat = 0.0;
  double ratio = 1.0;
  std::optional<ZCertificates> certificates;
  bool lemma_bound_satisfied = false;
  bool lemma_check_advisory = false;
  Index iterations_exact = 0;
  Index iterations_sketched = 0;
  double tol = 0.0;
  std::vector<std::string> notes;
};

// f(x_hat) <= (1 + Z2^2/Z1^2) f(x_star) when x_star is a global minimizer of
// f, else f(x_hat) <= (1 + Z2/Z1)^2 f(x_star); 1e-9 relative slack. For
// Monte Carlo certificates the check is advisory only (the one-sided
// estimates weaken the bound).
inline bool check_lemma_bound(SolveReport& rep, bool global_minimizer) {
  if (!rep.certificates) throw MissingCertificates("check_lemma_bound: no certificates");
  const auto& z = *rep.certificates;
  double bound;
  if (z.z1 <= 0.0) {
    bound = std::numeric_limits<double>::infinity();
  } else if (global_minimizer) {
    bound = 1.0 + (z.z2 * z.z2) / (z.z1 * z.z1);
  } else {
    bound = (1.0 + z.z2 / z.z1) * (1.0 + z.z2 / z.z1);
  }
  rep.lemma_check_advisory = (z.method == CertMethod::kMonteCarlo);
  rep.lemma_bound_satisfied = rep.f_hat <= bound * rep.f_star * (1.0 + 1e-9);
  return rep.lemma_bound_satisfied;
}

// Sketch once, solve the sketched program, evaluate both solutions on the
// true objective. cert_samples > 0 requests Monte Carlo cone certificates
// for active constrained problems (exact ones are always computed when the
// tangent cone is all of R^d).
inline SolveReport solve_sketched(const LsProblem& p, const SketchOperator& op,
                                  double tol = 1e-10, Index cert_samples = 0,
                                  std::uint64_t cert_seed = 0) {
  p.validate();
  if (op.cols() != p.A.rows())
    throw DimensionMismatch("solve_sketched: sketch columns != problem rows");
  SolveReport rep;
  rep.tol = tol;
  const ExactSolution exact = solve_exact(p, tol);
  rep.x_star = exact.x;
  rep.f_star = exact.f;
  rep.iterations_exact = exact.iterations;

  LsProblem sk{op.apply_matrix(p.A), op.apply(p.b), p.constraint};
  const ExactSolution skexact = solve_exact(sk, tol);
  rep.x_hat = skexact.x;
  rep.iterations_sketched = skexact.iterations;
  rep.f_hat = (p.A * rep.x_hat - p.b).squaredNorm();

  if (rep.f_star <= 1e-12) {
    rep.ratio = 1.0;
    rep.notes.push_back("exact fit: ratio pinned to 1, certificates skipped");
    return rep;
  }
  rep.ratio = rep.f_hat / rep.f_star;

  const bool unconstrained = std::holds_alternative<Unconstrained>(p.constraint);
  const bool active = detail::constraint_active(p.constraint, rep.x_star);
  try {
    if (unconstrained || !active) {
      rep.certificates = z_certificates_unconstrained(p, op);
      if (!unconstrained)
        rep.notes.push_back("constraint inactive at optimum: unconstrained certificates");
      check_lemma_bound(rep, /*global_minimizer=*/true);
    } else if (cert_samples > 0) {
      rep.certificates = z_certificates_cone_mc(p, op, rep.x_star, cert_samples, cert_seed);
      check_lemma_bound(rep, /*global_minimizer=*/false);
      rep.notes.push_back("one-sided Monte Carlo certificates: bound check advisory");
    }
  } catch (const ZeroResidual&) {
    rep.notes.push_back("zero residual: certificates skipped");
  }
  return rep;
}

struct SigmaEstimate {
  double value = 0.0;
  bool enumerated = false;
  Index starts = 0;
  bool upper_estimate = true;
};

// Upper estimate of inf |Ay|_2 over unit y with |y|_{2,1} <= 2 sqrt(k):
// exact minima over all column submatrices with at most floor(4k) blocks when
// that enumeration fits the budget, refined by projected gradient descent on
// the sphere from `budget` random starts. The true inf may be lower.
inline SigmaEstimate sigma_min_k_estimate(const Mat& A, double k, Index blocks,
                                          Index block_dim, Index budget,
                                          std::uint64_t seed) {
  if (budget < 1) throw BadConfig("sigma_min_k_estimate: budget >= 1");
  if (blocks * block_dim != A.cols())
    throw BadBlockStructure("sigma_min_k_estimate: cols != blocks * block_dim");
  SigmaEstimate out;
  out.value = std::numeric_limits<double>::infinity();
  const double feas_ratio = 2.0 * std::sqrt(k);

  const Index tmax = std::min<Index>(blocks, static_cast<Index>(std::floor(4.0 * k)));
  double total = 0.0;
  for (Index t = 1; t <= tmax && total <= static_cast<double>(budget); ++t)
    total += static_cast<double>(detail::binomial_capped(blocks, t, budget));
  if (tmax >= 1 && total <= static_cast<double>(budget)) {
    out.enumerated = true;
    std::vector<Index> sel;
    // enumerate all block subsets of size 1..tmax
    for (Index t = 1; t <= tmax; ++t) {
      sel.resize(static_cast<std::size_t>(t));
      for (Index i = 0; i < t; ++i) sel[static_cast<std::size_t>(i)] = i;
      for (;;) {
        Mat sub(A.rows(), t * block_dim);
        for (Index i = 0; i < t; ++i)
          sub.middleCols(i * block_dim, block_dim) =
              A.middleCols(sel[static_cast<std::size_t>(i)] * block_dim, block_dim);
        Eigen::JacobiSVD<Mat> svd(sub);
        out.value = std::min(out.value, svd.singularValues().minCoeff());
        Index i = 0;
        while (i + 1 < t && sel[static_cast<std::size_t>(i)] + 1 == sel[static_cast<std::size_t>(i + 1)]) ++i;
        if (sel[static_cast<std::size_t>(i)] + 1 >= blocks && i + 1 == t) break;
        ++sel[static_cast<std::size_t>(i)];
        for (Index r = 0; r < i; ++r) sel[static_cast<std::size_t>(r)] = r;
      }
    }
  }

  const double smax = detail::sigma_max(A);
  const double step = smax > 0.0 ? 0.9 / (smax * smax) : 1.0;
  // Candidates are made feasible by keeping the largest floor(4k) blocks:
  // such y always satisfy |y|_{2,1} <= sqrt(4k) |y|_2.
  const Index keep = std::min<Index>(blocks, std::max<Index>(1, static_cast<Index>(std::floor(4.0 * k))));
  auto record = [&](const Vec& cand) {
    std::vector<std::pair<double, Index>> mags(static_cast<std::size_t>(blocks));
    for (Index l = 0; l < blocks; ++l)
      mags[static_cast<std::size_t>(l)] = {cand.segment(l * block_dim, block_dim).norm(), l};
    std::nth_element(mags.begin(), mags.begin() + (keep - 1), mags.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    Vec w = Vec::Zero(cand.size());
    for (Index t = 0; t < keep; ++t) {
      const Index l = mags[static_cast<std::size_t>(t)].second;
      w.segment(l * block_dim, block_dim) = cand.segment(l * block_dim, block_dim);
    }
    const double nw = w.norm();
    if (nw > 0.0) out.value = std::min(out.value, (A * w).norm() / nw);
    double l21 = 0.0;
    for (Index l = 0; l < blocks; ++l) l21 += cand.segment(l * block_dim, block_dim).norm();
    const double nc = cand.norm();
    if (nc > 0.0 && l21 <= feas_ratio * nc * (1.0 + 1e-9))
      out.value = std::min(out.value, (A * cand).norm() / nc);
  };
  for (Index start = 0; start < budget; ++start) {
    Rng rng(substream(seed, static_cast<std::uint64_t>(start)));
    Vec y(A.cols());
    for (Index i = 0; i < y.size(); ++i) y[i] = rng.gaussian();
    y /= y.norm();
    record(y);
    for (int it = 0; it < 200; ++it) {
      Vec yn = y - step * (A.transpose() * (A * y));
      const double pre = yn.norm();
      if (pre == 0.0) break;
      yn = project_l21(yn, blocks, block_dim, feas_ratio * pre);
      const double nn = yn.norm();
      if (nn == 0.0) break;
      yn /= nn;
      const bool settled = (yn - y).norm() <= 1e-12;
      y = yn;
      record(y);
      if (settled) break;
    }
    ++out.starts;
  }
  if (!std::isfinite(out.value)) out.value = 0.0;
  return out;
}

}  // namespace sketchlab
