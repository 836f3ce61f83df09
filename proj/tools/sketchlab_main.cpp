// Command line front end: advise, sketch-apply, distortion, kappa, lsq,
// calibrate, bench. Exit codes: 0 success, 2 configuration error, 3 numeric
// failure; errors go to stderr as one JSON object.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sketchlab/sketchlab.hpp"

namespace sl = sketchlab;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out;
};

void write_output(const GlobalOpts& g, const sl::Json& j) {
  const std::string text = j.dump(2);
  if (g.out.empty()) {
    std::cout << text << "\n";
  } else {
    std::ofstream f(g.out);
    if (!f) throw sl::IoError("cannot write '" + g.out + "'");
    f << text << "\n";
  }
}

sl::Json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw sl::IoError("cannot open '" + path + "'");
  try {
    return sl::Json::parse(f);
  } catch (const std::exception& e) {
    throw sl::BadConfig("invalid JSON in '" + path + "': " + e.what());
  }
}

std::unique_ptr<sl::SketchOperator> make_operator(const std::string& type, sl::Index m,
                                                  sl::Index n, sl::Index s,
                                                  const std::string& variant,
                                                  std::uint64_t seed) {
  if (type == "sjlt")
    return std::make_unique<sl::SjltOperator>(
        m, n, s,
        variant == "block" ? sl::SjltVariant::kBlockCountSketch
                           : sl::SjltVariant::kUniformNoReplacement,
        seed);
  if (type == "dense") return std::make_unique<sl::DenseSignOperator>(m, n, seed);
  if (type == "fjlt") return std::make_unique<sl::FjltOperator>(n, m, seed);
  throw sl::BadConfig("unknown sketch type '" + type + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse and fast randomized sketching toolkit"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--threads", g.threads, "worker threads for sweeps");
  app.add_option("--out", g.out, "output path (default stdout)");
  app.fallthrough();  // global flags may follow the subcommand

  // advise
  auto* advise_cmd = app.add_subcommand("advise", "evaluate a parameter profile");
  std::string advise_input;
  advise_cmd->add_option("--input", advise_input, "JSON {profile, inputs, constants}")
      ->required();

  // sketch-apply
  auto* apply_cmd = app.add_subcommand("sketch-apply", "apply a sketch to a CSV matrix");
  std::string ap_type = "sjlt", ap_variant = "uniform", ap_matrix, ap_out_csv;
  sl::Index ap_m = 0, ap_s = 1;
  apply_cmd->add_option("--sketch", ap_type, "sjlt|dense|fjlt");
  apply_cmd->add_option("--variant", ap_variant, "uniform|block");
  apply_cmd->add_option("--m", ap_m, "target rows")->required();
  apply_cmd->add_option("--s", ap_s, "column sparsity");
  apply_cmd->add_option("--matrix", ap_matrix, "input CSV, columns are vectors")->required();
  apply_cmd->add_option("--out-csv", ap_out_csv, "write sketched matrix here")->required();

  // distortion
  auto* dist_cmd = app.add_subcommand("distortion", "restricted isometry constant on a set");
  std::string di_set, di_type = "sjlt", di_variant = "uniform", di_method = "auto";
  sl::Index di_m = 0, di_s = 1, di_samples = 2000;
  bool di_delta = false;
  dist_cmd->add_option("--set", di_set, "set descriptor JSON file")->required();
  dist_cmd->add_option("--sketch", di_type, "sjlt|dense|fjlt");
  dist_cmd->add_option("--variant", di_variant, "uniform|block");
  dist_cmd->add_option("--m", di_m, "target rows")->required();
  dist_cmd->add_option("--s", di_s, "column sparsity");
  dist_cmd->add_option("--method", di_method, "auto|finite|subspace|enum|mc");
  dist_cmd->add_option("--samples", di_samples, "Monte Carlo samples");
  dist_cmd->add_flag("--delta-diameter", di_delta, "also sample the delta-norm diameter");

  // kappa
  auto* kappa_cmd = app.add_subcommand("kappa", "masked-Gaussian complexity report");
  std::string ka_set;
  sl::Index ka_m = 0, ka_s = 2, ka_outer = 400, ka_inner = 200;
  kappa_cmd->add_option("--set", ka_set, "set descriptor JSON file")->required();
  kappa_cmd->add_option("--m", ka_m, "rows")->required();
  kappa_cmd->add_option("--s", ka_s, "column sparsity (>= 2)");
  kappa_cmd->add_option("--outer", ka_outer, "outer (mask) samples");
  kappa_cmd->add_option("--inner", ka_inner, "inner (Gaussian) samples");

  // lsq
  auto* lsq_cmd = app.add_subcommand("lsq", "exact vs sketched constrained least squares");
  std::string lq_matrix, lq_rhs, lq_constraint = "none", lq_type = "sjlt", lq_variant = "uniform";
  double lq_radius = 1.0, lq_tol = 1e-10;
  sl::Index lq_m = 0, lq_s = 1, lq_blocks = 0, lq_block_dim = 1, lq_cert_samples = 0;
  lsq_cmd->add_option("--matrix", lq_matrix, "A as CSV")->required();
  lsq_cmd->add_option("--rhs", lq_rhs, "b as CSV")->required();
  lsq_cmd->add_option("--constraint", lq_constraint, "none|l1|l21");
  lsq_cmd->add_option("--radius", lq_radius, "constraint radius");
  lsq_cmd->add_option("--blocks", lq_blocks, "number of blocks (l21)");
  lsq_cmd->add_option("--block-dim", lq_block_dim, "block dimension (l21)");
  lsq_cmd->add_option("--sketch", lq_type, "sjlt|dense|fjlt");
  lsq_cmd->add_option("--variant", lq_variant, "uniform|block");
  lsq_cmd->add_option("--m", lq_m, "target rows")->required();
  lsq_cmd->add_option("--s", lq_s, "column sparsity");
  lsq_cmd->add_option("--tol", lq_tol, "solver tolerance");
  lsq_cmd->add_option("--cert-samples", lq_cert_samples, "cone certificate samples");

  // calibrate
  auto* cal_cmd = app.add_subcommand("calibrate", "fit the universal constant empirically");
  std::string ca_profile = "subspace";
  double ca_target = 0.5, ca_confidence = 0.5;
  sl::Index ca_n = 64, ca_d = 8, ca_k = 2, ca_set_size = 32, ca_trials = 30;
  cal_cmd->add_option("--profile", ca_profile, "profile to calibrate");
  cal_cmd->add_option("--target-eps", ca_target, "target distortion");
  cal_cmd->add_option("--confidence", ca_confidence, "quantile that must meet the target");
  cal_cmd->add_option("--n", ca_n, "ambient dimension");
  cal_cmd->add_option("--d", ca_d, "subspace dimension / columns");
  cal_cmd->add_option("--k", ca_k, "sparsity");
  cal_cmd->add_option("--set-size", ca_set_size, "finite set size");
  cal_cmd->add_option("--trials", ca_trials, "trials per probe (>= 30)");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "run an experiment config");
  std::string be_config, be_plot;
  bench_cmd->add_option("--config", be_config, "experiment JSON")->required();
  bench_cmd->add_option("--plot", be_plot, "also emit plot CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << sl::Json{{"error", {{"type", "BadConfig"}, {"message", e.what()}}}}.dump()
              << "\n";
    return 2;
  }

  try {
    if (*advise_cmd) {
      const sl::Json j = load_json(advise_input);
      const sl::Profile prof = sl::profile_from_string(j.at("profile").get<std::string>());
      const sl::Json inputs_j = j.value("inputs", sl::Json::object());
      const sl::AdvisorInputs in = sl::inputs_from_json(inputs_j);
      const sl::Json constants_j = j.value("constants", sl::Json::object());
      sl::Constants c;
      for (const auto& [key, val] : constants_j.items()) c.values[key] = val.get<double>();
      write_output(g, sl::plan_to_json(sl::advise(prof, in, c)));
    } else if (*apply_cmd) {
      const sl::Mat X = sl::parse_matrix_csv(ap_matrix);
      auto op = make_operator(ap_type, ap_m, X.rows(), ap_s, ap_variant, g.seed);
      sl::write_matrix_csv(ap_out_csv, op->apply_matrix(X));
      write_output(g, sl::Json{{"rows", op->rows()}, {"cols", op->cols()},
                               {"written", ap_out_csv}});
    } else if (*dist_cmd) {
      const sl::SetDescriptor T =
          sl::set_from_json(load_json(di_set), std::filesystem::path(di_set).parent_path().string());
      auto op = make_operator(di_type, di_m, sl::ambient_dim(T), di_s, di_variant, g.seed);
      sl::DistortionReport rep;
      if (di_method == "auto")
        rep = sl::distortion_auto(*op, T, di_samples, sl::substream(g.seed, 0xd));
      else if (di_method == "finite")
        rep = sl::distortion_finite(*op, std::get<sl::FiniteSet>(T));
      else if (di_method == "subspace")
        rep = sl::distortion_subspace(*op, std::get<sl::Subspace>(T));
      else if (di_method == "enum")
        rep = sl::distortion_ksparse_enum(*op, std::get<sl::KSparseCap>(T));
      else if (di_method == "mc")
        rep = sl::distortion_mc(*op, T, di_samples, sl::substream(g.seed, 0xd));
      else
        throw sl::BadConfig("unknown method '" + di_method + "'");
      if (di_delta) {
        if (const auto* sj = dynamic_cast<const sl::SjltOperator*>(op.get()))
          rep.delta_diameter = sl::delta_diameter(*sj, T, di_samples, sl::substream(g.seed, 0xdd));
      }
      write_output(g, sl::report_to_json(rep));
    } else if (*kappa_cmd) {
      const sl::SetDescriptor T =
          sl::set_from_json(load_json(ka_set), std::filesystem::path(ka_set).parent_path().string());
      write_output(g, sl::report_to_json(
                          sl::kappa_mc(T, ka_m, ka_s, ka_outer, ka_inner, g.seed)));
    } else if (*lsq_cmd) {
      sl::LsProblem p;
      p.A = sl::parse_matrix_csv(lq_matrix);
      p.b = sl::parse_vector_csv(lq_rhs);
      if (lq_constraint == "l1")
        p.constraint = sl::L1Ball{lq_radius};
      else if (lq_constraint == "l21")
        p.constraint = sl::L21Ball{lq_blocks, lq_block_dim, lq_radius};
      else if (lq_constraint != "none")
        throw sl::BadConfig("unknown constraint '" + lq_constraint + "'");
      auto op = make_operator(lq_type, lq_m, p.A.rows(), lq_s, lq_variant, g.seed);
      write_output(g, sl::report_to_json(sl::solve_sketched(
                          p, *op, lq_tol, lq_cert_samples, sl::substream(g.seed, 0xce))));
    } else if (*cal_cmd) {
      sl::CalibrationParams gp;
      gp.n = ca_n;
      gp.d = ca_d;
      gp.k = ca_k;
      gp.set_size = ca_set_size;
      gp.trials = ca_trials;
      const auto res =
          sl::calibrate(sl::profile_from_string(ca_profile), gp, ca_target, ca_confidence, g.seed);
      write_output(g, sl::Json{{"constant", res.constant},
                               {"achieved", res.achieved},
                               {"trials", res.trials},
                               {"profile", ca_profile},
                               {"target_eps", ca_target},
                               {"confidence", ca_confidence}});
    } else if (*bench_cmd) {
      sl::ExperimentConfig cfg = sl::parse_experiment_config(
          load_json(be_config), std::filesystem::path(be_config).parent_path().string());
      cfg.threads = g.threads;
      const sl::RunReport rep = sl::run_experiment(cfg);
      write_output(g, rep.to_json());
      if (!be_plot.empty()) sl::emit_plot_data(rep, be_plot);
    }
  } catch (const sl::NumericError& e) {
    std::cerr << sl::error_to_json(e).dump() << "\n";
    return 3;
  } catch (const sl::Error& e) {
    std::cerr << sl::error_to_json(e).dump() << "\n";
    return 2;
  } catch (const sl::Json::exception& e) {
    std::cerr << sl::Json{{"error", {{"type", "BadConfig"}, {"message", e.what()}}}}.dump()
              << "\n";
    return 2;
  } catch (const std::bad_variant_access&) {
    std::cerr << sl::Json{{"error",
                           {{"type", "BadConfig"},
                            {"message", "requested method does not match the set descriptor"}}}}
                     .dump()
              << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << sl::Json{{"error", {{"type", "Internal"}, {"message", e.what()}}}}.dump()
              << "\n";
    return 3;
  }
  return 0;
}
