#pragma once

#include <json.hpp>
#include <filesystem>
#include <memory>
#include <string>

#include "sketchlab/advisor.hpp"
#include "sketchlab/csv.hpp"
#include "sketchlab/distortion.hpp"
#include "sketchlab/fjlt.hpp"
#include "sketchlab/least_squares.hpp"
#include "sketchlab/set_geometry.hpp"
#include "sketchlab/sketch_core.hpp"

namespace sketchlab {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Sketch operators: the JSON descriptor carries only the build parameters;
// the realized pattern is regenerated from the seed.

inline Json sketch_to_json(const SketchOperator& op) {
  if (const auto* s = dynamic_cast<const SjltOperator*>(&op))
    return Json{{"type", "sjlt"},
                {"m", s->rows()},
                {"n", s->cols()},
                {"s", s->sparsity()},
                {"variant", to_string(s->variant())},
                {"seed", s->seed()}};
  if (const auto* d = dynamic_cast<const DenseSignOperator*>(&op))
    return Json{{"type", "dense"}, {"m", d->rows()}, {"n", d->cols()}, {"seed", d->seed()}};
  const auto* f = dynamic_cast<const FjltOperator*>(&op);
  if (!f) throw BadConfig("sketch_to_json: unknown operator type");
  return Json{{"type", "fjlt"},
              {"n", f->cols()},
              {"m", f->target_rows()},
              {"seed", f->seed()},
              {"transform", "wht"},
              {"realized_rows", f->rows()},
              {"redraws", f->redraws()}};
}

inline std::unique_ptr<SketchOperator> sketch_from_json(const Json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "sjlt") {
    const std::string var = j.value("variant", "uniform");
    if (var != "uniform" && var != "block")
      throw BadConfig("sketch_from_json: variant must be 'uniform' or 'block'");
    return std::make_unique<SjltOperator>(
        j.at("m").get<Index>(), j.at("n").get<Index>(), j.at("s").get<Index>(),
        var == "block" ? SjltVariant::kBlockCountSketch : SjltVariant::kUniformNoReplacement,
        j.at("seed").get<std::uint64_t>());
  }
  if (type == "dense")
    return std::make_unique<DenseSignOperator>(j.at("m").get<Index>(), j.at("n").get<Index>(),
                                               j.at("seed").get<std::uint64_t>());
  if (type == "fjlt")
    return std::make_unique<FjltOperator>(j.at("n").get<Index>(), j.at("m").get<Index>(),
                                          j.at("seed").get<std::uint64_t>());
  throw BadConfig("sketch_from_json: unknown type '" + type + "'");
}

// ---------------------------------------------------------------------------
// Set descriptors. Matrices are referenced as CSV file paths (row-major, no
// header), resolved relative to `base` when given.

inline std::string resolve_path(const std::string& p, const std::string& base) {
  if (base.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (std::filesystem::path(base) / p).string();
}

inline SetDescriptor set_from_json(const Json& j, const std::string& base = "") {
  const std::string type = j.at("type").get<std::string>();
  if (type == "finite") {
    // rows of the CSV are points
    const Mat P = parse_matrix_csv(resolve_path(j.at("points").get<std::string>(), base));
    return FiniteSet(P.transpose());
  }
  if (type == "subspace") {
    return Subspace(parse_matrix_csv(resolve_path(j.at("basis").get<std::string>(), base)));
  }
  if (type == "ksparse") {
    std::optional<Mat> H;
    if (j.contains("dictionary"))
      H = parse_matrix_csv(resolve_path(j.at("dictionary").get<std::string>(), base));
    return KSparseCap(j.at("n").get<Index>(), j.at("k").get<Index>(), std::move(H));
  }
  if (type == "union") {
    std::vector<Mat> bases;
    for (const auto& p : j.at("bases"))
      bases.push_back(parse_matrix_csv(resolve_path(p.get<std::string>(), base)));
    return UnionOfSubspaces(std::move(bases));
  }
  throw UnsupportedDescriptor("set_from_json: unknown type '" + type + "'");
}

// ---------------------------------------------------------------------------
// Reports and plans.

inline Json report_to_json(const DistortionReport& r) {
  Json j{{"epsilon", r.epsilon},
         {"method", to_string(r.method)},
         {"wall_time_s", r.wall_time_s}};
  if (r.samples > 0) j["samples"] = r.samples;
  if (r.delta_diameter) j["delta_diameter"] = *r.delta_diameter;
  return j;
}

inline Json report_to_json(const GeometryReport& r) {
  return Json{{"gaussian_width", r.gaussian_width},
              {"gaussian_width_se", r.gaussian_width_se},
              {"kappa", r.kappa},
              {"q_grid", r.q_grid},
              {"kappa_by_q", r.kappa_by_q},
              {"se_by_q", r.se_by_q},
              {"outer_samples", r.outer_samples},
              {"inner_samples", r.inner_samples},
              {"width_samples", r.width_samples}};
}

inline Json inputs_to_json(const AdvisorInputs& in) {
  Json j = Json::object();
  auto put = [&j](const char* name, const std::optional<double>& v) {
    if (v) j[name] = *v;
  };
  put("n", in.n);
  put("d", in.d);
  put("k", in.k);
  put("eps", in.eps);
  put("eta", in.eta);
  put("mu", in.mu);
  put("alpha", in.alpha);
  put("set_size", in.set_size);
  put("b", in.b);
  put("D", in.D);
  put("block_col_norm", in.block_col_norm);
  put("linf_block_norm", in.linf_block_norm);
  put("sigma_min_k", in.sigma_min_k);
  put("d21sq", in.d21sq);
  put("dict_max_abs", in.dict_max_abs);
  return j;
}

inline AdvisorInputs inputs_from_json(const Json& j) {
  AdvisorInputs in;
  auto get = [&j](const char* name) -> std::optional<double> {
    if (j.contains(name)) return j.at(name).get<double>();
    return std::nullopt;
  };
  in.n = get("n");
  in.d = get("d");
  in.k = get("k");
  in.eps = get("eps");
  in.eta = get("eta");
  in.mu = get("mu");
  in.alpha = get("alpha");
  in.set_size = get("set_size");
  in.b = get("b");
  in.D = get("D");
  in.block_col_norm = get("block_col_norm");
  in.linf_block_norm = get("linf_block_norm");
  in.sigma_min_k = get("sigma_min_k");
  in.d21sq = get("d21sq");
  in.dict_max_abs = get("dict_max_abs");
  return in;
}

inline Json plan_to_json(const SketchPlan& p) {
  Json c = Json::object();
  for (const auto& [k, v] : p.constants.values) c[k] = v;
  return Json{{"m", p.m},
              {"s", p.s},
              {"profile", to_string(p.profile)},
              {"inputs", inputs_to_json(p.inputs)},
              {"constants", c},
              {"notes", p.notes}};
}

inline Json report_to_json(const SolveReport& r) {
  Json j{{"f_star", r.f_star},
         {"f_hat", r.f_hat},
         {"ratio", r.ratio},
         {"iterations_exact", r.iterations_exact},
         {"iterations_sketched", r.iterations_sketched},
         {"tol", r.tol},
         {"notes", r.notes}};
  j["x_star"] = std::vector<double>(r.x_star.data(), r.x_star.data() + r.x_star.size());
  j["x_hat"] = std::vector<double>(r.x_hat.data(), r.x_hat.data() + r.x_hat.size());
  if (r.certificates) {
    j["z1"] = r.certificates->z1;
    j["z2"] = r.certificates->z2;
    j["cert_method"] =
        r.certificates->method == CertMethod::kExact ? "exact" : "monte_carlo";
    j["cert_one_sided"] = r.certificates->one_sided;
    j["lemma_bound_satisfied"] = r.lemma_bound_satisfied;
    j["lemma_check_advisory"] = r.lemma_check_advisory;
  }
  return j;
}

inline Json error_to_json(const Error& e) {
  return Json{{"error", {{"type", e.kind()}, {"message", e.what()}}}};
}

}  // namespace sketchlab
