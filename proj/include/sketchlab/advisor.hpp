#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sketchlab/distortion.hpp"
#include "sketchlab/errors.hpp"
#include "sketchlab/least_squares.hpp"
#include "sketchlab/set_geometry.hpp"
#include "sketchlab/sketch_core.hpp"

namespace sketchlab {

enum class Profile {
  kSubspace,
  kSubspaceMain,
  kKsparseDictionary,
  kKsparseMain,
  kFlatFinite,
  kFiniteUnionIncoherent,
  kFiniteUnionCoherent,
  kManifold,
  kClsUnconstrained,
  kClsGroupLasso,
  kFjltCls,
};

inline std::string to_string(Profile p) {
  switch (p) {
    case Profile::kSubspace: return "subspace";
    case Profile::kSubspaceMain: return "subspace_main";
    case Profile::kKsparseDictionary: return "ksparse_dictionary";
    case Profile::kKsparseMain: return "ksparse_main";
    case Profile::kFlatFinite: return "flat_finite";
    case Profile::kFiniteUnionIncoherent: return "finite_union_incoherent";
    case Profile::kFiniteUnionCoherent: return "finite_union_coherent";
    case Profile::kManifold: return "manifold";
    case Profile::kClsUnconstrained: return "cls_unconstrained";
    case Profile::kClsGroupLasso: return "cls_group_lasso";
    default: return "fjlt_cls";
  }
}

inline Profile profile_from_string(const std::string& s) {
  for (Profile p : {Profile::kSubspace, Profile::kSubspaceMain, Profile::kKsparseDictionary,
                    Profile::kKsparseMain, Profile::kFlatFinite, Profile::kFiniteUnionIncoherent,
                    Profile::kFiniteUnionCoherent, Profile::kManifold, Profile::kClsUnconstrained,
                    Profile::kClsGroupLasso, Profile::kFjltCls})
    if (to_string(p) == s) return p;
  throw BadConfig("unknown profile '" + s + "'");
}

// Inputs a profile may consume; unset fields are simply absent. `eta`
// left unset means "as small as the profile allows", i.e. 1/m.
struct AdvisorInputs {
  std::optional<double> n, d, k, eps, eta, mu, alpha, set_size, b, D;
  std::optional<double> block_col_norm;   // max block column norm of A
  std::optional<double> linf_block_norm;  // max block row norm of A
  std::optional<double> sigma_min_k;
  std::optional<double> d21sq;            // squared l21 diameter of the cone
  std::optional<double> dict_max_abs;     // largest dictionary entry
};

// Multiplicative constants; every key defaults to 1. `c_m` and `c_s` scale
// the full right-hand sides, `c_m1/c_m2/c_s1/c_s2` scale individual terms of
// multi-term conditions.
struct Constants {
  std::map<std::string, double> values;

  double get(const std::string& key) const {
    auto it = values.find(key);
    return it == values.end() ? 1.0 : it->second;
  }
  static Constants uniform(double c) { return Constants{{{"c_m", c}, {"c_s", c}}}; }
};

struct SketchPlan {
  Index m = 0;
  Index s = 0;
  Profile profile = Profile::kSubspace;
  AdvisorInputs inputs;
  Constants constants;
  std::vector<std::string> notes;
};

namespace detail {

inline double req(const std::optional<double>& v, const char* name) {
  if (!v) throw MissingInput(std::string("advise: input '") + name + "' is required");
  return *v;
}

struct ProfileEval {
  double m_rhs = 0.0;
  double s_rhs = 0.0;
};

// log always means natural log; log m uses the current fixed-point iterate.
inline ProfileEval eval_profile(Profile prof, const AdvisorInputs& in, const Constants& c,
                                double m, double eta) {
  const double lm = std::log(m);
  const double le = std::log(1.0 / eta);
  const double eps = *in.eps;
  ProfileEval out;
  switch (prof) {
    case Profile::kSubspace: {
      const double d = req(in.d, "d");
      const double mu = req(in.mu, "mu");
      const double mind = std::min(std::pow(std::log(d / eps), 2.0), lm * lm);
      out.m_rhs = c.get("c_m") * ((d + lm) * mind + d * le) / (eps * eps);
      out.s_rhs = c.get("c_s") * (lm * le * mind + le * le) * mu * mu / (eps * eps);
      break;
    }
    case Profile::kSubspaceMain: {
      const double d = req(in.d, "d");
      const double mu = req(in.mu, "mu");
      const double ln = std::log(req(in.n, "n"));
      out.m_rhs = c.get("c_m") * d * std::pow(ln, 5.0) * std::pow(lm, 4.0) / (eps * eps);
      out.s_rhs = c.get("c_s") *
                  (c.get("c_s1") * std::pow(ln, 4.0) * std::pow(lm, 6.0) +
                   c.get("c_s2") * std::pow(ln, 5.0) * std::pow(lm, 4.0) * mu * mu) /
                  (eps * eps);
      break;
    }
    case Profile::kKsparseDictionary: {
      const double k = req(in.k, "k");
      const double ln = std::log(req(in.n, "n"));
      out.m_rhs = c.get("c_m") * k * std::pow(ln, 8.0) * lm / (eps * eps);
      out.s_rhs = c.get("c_s") * std::pow(ln, 7.0) * lm * le / (eps * eps);
      break;
    }
    case Profile::kKsparseMain: {
      const double k = req(in.k, "k");
      const double ln = std::log(req(in.n, "n"));
      out.m_rhs = c.get("c_m") * k * std::pow(ln, 6.0) * std::pow(lm, 4.0) / (eps * eps);
      out.s_rhs = c.get("c_s") * std::pow(ln, 4.0) * std::pow(lm, 6.0) / (eps * eps);
      break;
    }
    case Profile::kFlatFinite: {
      const double lt = std::log(req(in.set_size, "set_size"));
      const double alpha = req(in.alpha, "alpha");
      const double ln = std::log(req(in.n, "n"));
      out.m_rhs = c.get("c_m") * lt * std::pow(lm, 4.0) * std::pow(ln, 5.0) / (eps * eps);
      out.s_rhs = c.get("c_s") *
                  (c.get("c_s1") * (alpha * lt) * (alpha * lt) * std::pow(lm, 4.0) * std::pow(ln, 5.0) +
                   c.get("c_s2") * std::pow(lm, 6.0) * std::pow(ln, 4.0)) /
                  (eps * eps);
      break;
    }
    case Profile::kFiniteUnionIncoherent: {
      const double d = req(in.d, "d");
      const double lN = std::log(req(in.set_size, "set_size"));
      const double alpha = req(in.alpha, "alpha");
      const double ln = std::log(req(in.n, "n"));
      out.m_rhs = c.get("c_m") * std::pow(lm, 4.0) * std::pow(ln, 5.0) * (d + lN) / (eps * eps);
      out.s_rhs = c.get("c_s") *
                  (c.get("c_s1") * std::pow(lm, 6.0) * std::pow(ln, 4.0) +
                   c.get("c_s2") * (alpha * lN) * (alpha * lN) * std::pow(lm, 4.0) * std::pow(ln, 5.0)) /
                  (eps * eps);
      break;
    }
    case Profile::kFiniteUnionCoherent: {
      const double d = req(in.d, "d");
      const double lN = std::log(req(in.set_size, "set_size"));
      const double ln = std::log(req(in.n, "n"));
      out.m_rhs = c.get("c_m") *
                  (c.get("c_m1") * std::pow(lm, 4.0) * std::pow(ln, 5.0) * d +
                   c.get("c_m2") * std::pow(lm, 3.0) * std::pow(ln, 5.0) * lN) /
                  (eps * eps);
      out.s_rhs = c.get("c_s") *
                  (c.get("c_s1") * std::pow(lm, 6.0) * std::pow(ln, 4.0) +
                   c.get("c_s2") * std::pow(lm, 4.0) * std::pow(ln, 5.0) * lN) /
                  (eps * eps);
      break;
    }
    case Profile::kManifold: {
      const double d = req(in.d, "d");
      const double alpha = req(in.alpha, "alpha");
      const double ln = std::log(req(in.n, "n"));
      if (alpha * std::sqrt(d) >= 1.0)
        throw BadConfig("manifold profile: requires alpha * sqrt(d) < 1");
      out.m_rhs = c.get("c_m") * std::pow(lm, 4.0) * std::pow(ln, 5.0) * d *
                  std::log(1.0 / (alpha * std::sqrt(d))) / (eps * eps);
      out.s_rhs = c.get("c_s") *
                  (c.get("c_s1") * std::pow(lm, 6.0) * std::pow(ln, 4.0) +
                   c.get("c_s2") * std::pow(lm, 4.0) * std::pow(ln, 7.0) * (alpha * d) * (alpha * d)) /
                  (eps * eps);
      break;
    }
    case Profile::kClsUnconstrained: {
      const double r = req(in.d, "d");  // rank of A
      const double mu = req(in.mu, "mu");
      out.m_rhs = c.get("c_m") * (le * (r + lm) * lm * lm + le * le * r) / eps;
      out.s_rhs = c.get("c_s") *
                  (mu * mu * (le * le + le * std::pow(lm, 3.0)) / eps +
                   mu * (std::pow(le, 1.5) + le * std::pow(lm, 1.5)) / std::sqrt(eps));
      break;
    }
    case Profile::kClsGroupLasso: {
      const double lb = std::log(req(in.b, "b"));
      const double ln = std::log(req(in.n, "n"));
      if (lb <= 0.0) throw BadConfig("cls_group_lasso: b >= 2 required");
      const double an = req(in.block_col_norm, "block_col_norm");
      const double ai = req(in.linf_block_norm, "linf_block_norm");
      double d21sq;
      if (in.d21sq) {
        d21sq = *in.d21sq;
      } else {
        const double k = req(in.k, "k");
        const double sig = req(in.sigma_min_k, "sigma_min_k");
        if (sig <= 0.0) throw BadConfig("cls_group_lasso: sigma_min_k must be positive");
        d21sq = k / (sig * sig);
      }
      const double af = std::pow(ln, 6.0) * lm * lm * lb * lb;
      out.m_rhs = c.get("c_m") * le * (af + le * lb) * an * an * d21sq / (eps * eps);
      out.s_rhs = c.get("c_s") * le * (lb + le) * (af + le * lb) * ai * ai * d21sq / (eps * eps);
      break;
    }
    case Profile::kFjltCls: {
      const double lb = std::log(req(in.b, "b"));
      const double ln = std::log(req(in.n, "n"));
      const double ld = std::log(req(in.d, "d"));
      if (lb <= 0.0) throw BadConfig("fjlt_cls: b >= 2 required");
      const double an = req(in.block_col_norm, "block_col_norm");
      double d21sq;
      if (in.d21sq) {
        d21sq = *in.d21sq;
      } else {
        const double k = req(in.k, "k");
        const double sig = req(in.sigma_min_k, "sigma_min_k");
        if (sig <= 0.0) throw BadConfig("fjlt_cls: sigma_min_k must be positive");
        d21sq = k / (sig * sig);
      }
      const double beta = (le * le + lb + ln) * ln * std::pow(lb, 3.0) * ld * ld;
      out.m_rhs = c.get("c_m") * beta * an * an * d21sq / (eps * eps);
      out.s_rhs = 0.0;  // no column sparsity in this construction
      break;
    }
  }
  return out;
}

inline bool profile_requires_small_eta(Profile p) {
  switch (p) {
    case Profile::kSubspace:
    case Profile::kKsparseDictionary:
    case Profile::kClsUnconstrained:
    case Profile::kClsGroupLasso:
      return true;
    default:
      return false;
  }
}

inline bool profile_uses_eta(Profile p) {
  return profile_requires_small_eta(p) || p == Profile::kFjltCls;
}

}  // namespace detail

// Smallest (m, s) satisfying the profile inequalities, found by iterating
// m <- ceil(rhs(m)) from m0 = 16 with a 100 iteration cap. Profiles whose
// guarantee needs eta <= 1/m get eta clamped to 1/m during the iteration and
// a note when the clamp binds; an unset eta means eta = 1/m throughout.
inline SketchPlan advise(Profile prof, const AdvisorInputs& in, const Constants& c = {}) {
  const double eps = detail::req(in.eps, "eps");
  if (!(eps > 0.0 && eps <= 0.5))
    throw EpsilonOutOfRange("advise: eps must lie in (0, 1/2], got " + std::to_string(eps));
  if (in.eta && !(*in.eta > 0.0 && *in.eta < 1.0))
    throw BadConfig("advise: eta must lie in (0, 1)");

  SketchPlan plan;
  plan.profile = prof;
  plan.inputs = in;
  plan.constants = c;

  const bool uses_eta = detail::profile_uses_eta(prof);
  const bool small_eta = detail::profile_requires_small_eta(prof);
  bool eta_clamped = false;

  auto effective_eta = [&](double m) {
    if (!uses_eta) return 0.5;  // value is never consumed by the formula
    if (!in.eta) return 1.0 / m;
    if (small_eta && *in.eta > 1.0 / m) {
      eta_clamped = true;
      return 1.0 / m;
    }
    return *in.eta;
  };

  double m = 16.0;
  double s_req = 1.0;
  bool stable = false;
  for (int it = 0; it < 100; ++it) {
    const auto rhs = detail::eval_profile(prof, in, c, m, effective_eta(m));
    if (!std::isfinite(rhs.m_rhs) || !std::isfinite(rhs.s_rhs) || rhs.m_rhs > 1e15 ||
        rhs.s_rhs > 1e15)
      throw NoFixedPoint("advise: right-hand side diverged");
    const double m_req = std::max(1.0, std::ceil(rhs.m_rhs));
    s_req = std::max(1.0, std::ceil(rhs.s_rhs));
    const double m_next = std::max(m_req, s_req);  // an SJLT needs s <= m
    if (m_next == m) {
      stable = true;
      break;
    }
    m = m_next;
  }
  if (!stable) throw NoFixedPoint("advise: no stable m within 100 iterations");

  plan.m = static_cast<Index>(m);
  plan.s = static_cast<Index>(std::min(s_req, m));
  if (prof == Profile::kFjltCls) {
    plan.s = 1;
    plan.notes.push_back("fjlt: column sparsity not applicable, s fixed to 1");
  }
  if (uses_eta && !in.eta) plan.notes.push_back("eta defaulted to 1/m");
  if (eta_clamped) plan.notes.push_back("eta clamped to 1/m as the guarantee requires");
  if (prof == Profile::kKsparseDictionary && in.dict_max_abs) {
    const double thr = 1.0 / std::sqrt(*in.k * std::log(*in.n));
    if (*in.dict_max_abs >= thr)
      plan.notes.push_back("dictionary flatness condition violated: max entry >= (k log n)^{ -1/2 }");
  }
  if (prof == Profile::kKsparseMain && in.dict_max_abs) {
    const double thr = 1.0 / (std::sqrt(*in.k) * std::log(*in.n));
    if (*in.dict_max_abs >= thr)
      plan.notes.push_back("dictionary flatness condition violated: max entry >= k^{-1/2} (log n)^{-1}");
  }
  return plan;
}

// Back-substitution check used by tests and the CLI: the returned plan must
// satisfy its own inequalities with 1e-9 slack on the log scale.
inline bool plan_satisfies_profile(const SketchPlan& plan) {
  const double m = static_cast<double>(plan.m);
  double eta = 0.5;
  if (detail::profile_uses_eta(plan.profile))
    eta = plan.inputs.eta ? std::min(*plan.inputs.eta, detail::profile_requires_small_eta(plan.profile)
                                                           ? 1.0 / m
                                                           : *plan.inputs.eta)
                          : 1.0 / m;
  const auto rhs = detail::eval_profile(plan.profile, plan.inputs, plan.constants, m, eta);
  const double slack = 1e-9;
  const bool m_ok = m >= rhs.m_rhs * (1.0 - slack);
  const bool s_ok = plan.profile == Profile::kFjltCls ||
                    static_cast<double>(plan.s) >= rhs.s_rhs * (1.0 - slack);
  return m_ok && s_ok;
}

struct RestrictedEigenvalueInputs {
  double block_col_norm = 0.0;
  double linf_block_norm = 0.0;
  SigmaEstimate sigma;
};

// Norm statistics a group-lasso plan needs, plus the sigma_min_k upper
// estimate (method-tagged; consumers are warned it may under-provision m).
inline RestrictedEigenvalueInputs restricted_eigenvalue_inputs(const Mat& A, double k,
                                                               Index blocks, Index block_dim,
                                                               Index sigma_budget = 16,
                                                               std::uint64_t seed = 0) {
  if (blocks * block_dim != A.cols())
    throw BadBlockStructure("restricted_eigenvalue_inputs: cols != blocks * block_dim");
  RestrictedEigenvalueInputs out;
  for (Index l = 0; l < blocks; ++l)
    out.block_col_norm =
        std::max(out.block_col_norm, A.middleCols(l * block_dim, block_dim).norm());
  for (Index j = 0; j < A.rows(); ++j)
    for (Index l = 0; l < blocks; ++l)
      out.linf_block_norm = std::max(
          out.linf_block_norm, A.row(j).segment(l * block_dim, block_dim).norm());
  out.sigma = sigma_min_k_estimate(A, k, blocks, block_dim, sigma_budget, seed);
  return out;
}

// ---------------------------------------------------------------------------
// Empirical calibration of the universal constants.

struct CalibrationParams {
  Index n = 64;
  Index d = 8;          // subspace dimension / columns of A
  Index k = 2;          // sparsity
  Index set_size = 32;  // flat finite sets
  Index trials = 30;
  Index m_cap = 8192;   // plans beyond this are counted as failures
  double noise = 0.1;   // residual scale for least squares instances
  double c_lo = 1.0 / (std::uint64_t(1) << 40);
  double c_hi = 1e6;
};

namespace detail {

struct LassoInstance {
  LsProblem problem;
  double f_star = 0.0;
  AdvisorInputs inputs;
};

inline LassoInstance make_lasso_instance(const CalibrationParams& gp, double eps,
                                         std::uint64_t seed) {
  Rng rng(seed);
  LassoInstance inst;
  Mat A(gp.n, gp.d);
  for (Index i = 0; i < gp.n; ++i)
    for (Index j = 0; j < gp.d; ++j) A(i, j) = rng.gaussian();
  Vec xt = Vec::Zero(gp.d);
  for (Index t = 0; t < gp.k; ++t) {
    const Index pos = static_cast<Index>(rng.below(static_cast<std::uint64_t>(gp.d)));
    xt[pos] = rng.gaussian();
  }
  if (xt.lpNorm<1>() == 0.0) xt[0] = 1.0;
  Vec noise(gp.n);
  for (Index i = 0; i < gp.n; ++i) noise[i] = gp.noise * rng.gaussian();
  inst.problem = LsProblem{A, A * xt + noise, L1Ball{xt.lpNorm<1>()}};
  inst.f_star = solve_exact(inst.problem).f;

  const auto rei = restricted_eigenvalue_inputs(A, static_cast<double>(gp.k), gp.d, 1, 8, seed ^ 0x51);
  inst.inputs.n = static_cast<double>(gp.n);
  inst.inputs.b = static_cast<double>(gp.d);
  inst.inputs.D = 1.0;
  inst.inputs.k = static_cast<double>(gp.k);
  inst.inputs.eps = eps;
  inst.inputs.block_col_norm = rei.block_col_norm;
  inst.inputs.linf_block_norm = rei.linf_block_norm;
  inst.inputs.sigma_min_k = std::max(rei.sigma.value, 1e-8);
  return inst;
}

}  // namespace detail

struct CalibrationResult {
  double constant = 0.0;
  double achieved = 0.0;  // distortion at the returned constant's quantile
  Index trials = 0;
};

// Smallest uniform constant c (doubling then 8 bisection steps) such that
// plans from advise(.., constants = c) keep the `confidence` quantile of the
// empirical distortion at or below target_eps over >= `trials` seeded trials.
// For the group lasso the per-trial distortion is 1 - sqrt(f*/f-hat), the
// epsilon for which the objective-ratio guarantee (1-eps)^{-2} is tight.
inline CalibrationResult calibrate(Profile prof, const CalibrationParams& gp, double target_eps,
                                   double confidence, std::uint64_t seed) {
  if (!(confidence > 0.0 && confidence < 1.0))
    throw BadConfig("calibrate: confidence must lie in (0,1)");
  const Index trials = std::max<Index>(gp.trials, 30);

  // Per-trial fixed data, independent of the constant being probed. Targets
  // outside the advisable range are probed at a clamped eps; the pass test
  // still uses the raw target.
  std::vector<SetDescriptor> sets;
  std::vector<detail::LassoInstance> lasso;
  AdvisorInputs base;
  const double probe_eps = std::min(0.5, std::max(target_eps, 1e-6));
  base.eps = probe_eps;

  switch (prof) {
    case Profile::kSubspace:
    case Profile::kSubspaceMain: {
      for (Index t = 0; t < trials; ++t) {
        Rng rng(substream(seed, 0x5e7 + static_cast<std::uint64_t>(t)));
        Mat G(gp.n, gp.d);
        for (Index i = 0; i < gp.n; ++i)
          for (Index j = 0; j < gp.d; ++j) G(i, j) = rng.gaussian();
        Eigen::HouseholderQR<Mat> qr(G);
        Mat U = qr.householderQ() * Mat::Identity(gp.n, gp.d);
        sets.emplace_back(Subspace(std::move(U)));
      }
      base.n = static_cast<double>(gp.n);
      base.d = static_cast<double>(gp.d);
      break;
    }
    case Profile::kKsparseDictionary:
    case Profile::kKsparseMain: {
      base.n = static_cast<double>(gp.n);
      base.k = static_cast<double>(gp.k);
      break;
    }
    case Profile::kFlatFinite: {
      const double a = 1.0 / std::sqrt(static_cast<double>(gp.n));
      for (Index t = 0; t < trials; ++t) {
        Rng rng(substream(seed, 0xf1a7 + static_cast<std::uint64_t>(t)));
        Mat P(gp.n, gp.set_size);
        for (Index cidx = 0; cidx < gp.set_size; ++cidx)
          for (Index i = 0; i < gp.n; ++i) P(i, cidx) = rng.sign_bit() ? -a : a;
        sets.emplace_back(FiniteSet(std::move(P)));
      }
      base.n = static_cast<double>(gp.n);
      base.set_size = static_cast<double>(gp.set_size);
      base.alpha = a;
      break;
    }
    case Profile::kClsGroupLasso: {
      for (Index t = 0; t < trials; ++t)
        lasso.push_back(detail::make_lasso_instance(gp, probe_eps,
                                                    substream(seed, 0x1a550 + static_cast<std::uint64_t>(t))));
      break;
    }
    default:
      throw BadConfig("calibrate: profile '" + to_string(prof) +
                      "' has no executable distortion experiment");
  }

  auto trial_distortion = [&](double c, Index t) -> double {
    Constants cc = Constants::uniform(c);
    AdvisorInputs in = base;
    SketchPlan plan;
    if (prof == Profile::kClsGroupLasso) {
      in = lasso[static_cast<std::size_t>(t)].inputs;
    } else if (prof == Profile::kSubspace || prof == Profile::kSubspaceMain) {
      in.mu = incoherence(std::get<Subspace>(sets[static_cast<std::size_t>(t)]).basis);
    }
    try {
      plan = advise(prof, in, cc);
    } catch (const NoFixedPoint&) {
      return std::numeric_limits<double>::infinity();
    }
    if (plan.m > gp.m_cap) return std::numeric_limits<double>::infinity();
    const std::uint64_t op_seed = substream(seed, 0x09 + static_cast<std::uint64_t>(t));
    const SjltOperator op(plan.m, static_cast<Index>(gp.n), plan.s,
                          SjltVariant::kUniformNoReplacement, op_seed);
    switch (prof) {
      case Profile::kSubspace:
      case Profile::kSubspaceMain:
      case Profile::kFlatFinite:
        return distortion_auto(op, sets[static_cast<std::size_t>(t)], 2000, op_seed).epsilon;
      case Profile::kKsparseDictionary:
      case Profile::kKsparseMain:
        return distortion_auto(op, SetDescriptor(KSparseCap(gp.n, gp.k)), 2000, op_seed).epsilon;
      default: {
        const auto& inst = lasso[static_cast<std::size_t>(t)];
        const auto rep = solve_sketched(inst.problem, op);
        if (rep.f_star <= 1e-12 || rep.ratio <= 1.0) return 0.0;
        return 1.0 - std::sqrt(1.0 / rep.ratio);
      }
    }
  };

  const Index need = std::max<Index>(
      1, static_cast<Index>(std::ceil(confidence * static_cast<double>(trials))));
  auto quantile_at = [&](double c) -> double {
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(trials));
    for (Index t = 0; t < trials; ++t) vals.push_back(trial_distortion(c, t));
    std::sort(vals.begin(), vals.end());
    return vals[static_cast<std::size_t>(need - 1)];
  };

  double c = gp.c_lo;
  double q = quantile_at(c);
  if (q <= target_eps) return CalibrationResult{c, q, trials};
  double lo = c;
  bool passed = false;
  while (c < gp.c_hi) {
    lo = c;
    c *= 2.0;
    q = quantile_at(c);
    if (q <= target_eps) {
      passed = true;
      break;
    }
  }
  if (!passed)
    throw CalibrationBudgetExceeded("calibrate: no constant below " + std::to_string(gp.c_hi) +
                                    " reaches the target distortion");
  double hi = c;
  double hi_q = q;
  for (int step = 0; step < 8; ++step) {
    const double mid = 0.5 * (lo + hi);
    const double mq = quantile_at(mid);
    if (mq <= target_eps) {
      hi = mid;
      hi_q = mq;
    } else {
      lo = mid;
    }
  }
  return CalibrationResult{hi, hi_q, trials};
}

}  // namespace sketchlab
