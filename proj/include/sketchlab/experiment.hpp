#pragma once

#include <array>
#include <atomic>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "sketchlab/serialize.hpp"

namespace sketchlab {

inline constexpr const char* kVersion = "0.2.0";

enum class ExperimentKind { kDistortionSweep, kCalibrate, kLsqBench, kKappaReport };

inline ExperimentKind kind_from_string(const std::string& s) {
  if (s == "distortion-sweep") return ExperimentKind::kDistortionSweep;
  if (s == "calibrate") return ExperimentKind::kCalibrate;
  if (s == "lsq-bench") return ExperimentKind::kLsqBench;
  if (s == "kappa-report") return ExperimentKind::kKappaReport;
  throw BadConfig("unknown experiment kind '" + s + "'");
}

struct GridCell {
  Index m = 0;
  Index s = 1;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kDistortionSweep;
  Json raw;               // full config echo
  std::string base_dir;   // directory of the config file, for relative paths
  std::vector<GridCell> cells;
  std::vector<std::uint64_t> seeds;
  std::string sketch_type = "sjlt";    // sjlt | dense | fjlt
  std::string sketch_variant = "uniform";
  Index mc_samples = 2000;
  Index threads = 1;
};

inline ExperimentConfig parse_experiment_config(const Json& j, const std::string& base_dir) {
  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.base_dir = base_dir;
  cfg.kind = kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("sketch")) {
    cfg.sketch_type = j["sketch"].value("type", "sjlt");
    cfg.sketch_variant = j["sketch"].value("variant", "uniform");
  }
  std::vector<Index> ms, ss;
  if (j.contains("grid")) {
    if (j["grid"].contains("m")) ms = j["grid"]["m"].get<std::vector<Index>>();
    if (j["grid"].contains("s")) ss = j["grid"]["s"].get<std::vector<Index>>();
  }
  if (ms.empty()) ms.push_back(j.value("m", Index(0)));
  if (ss.empty()) ss.push_back(j.value("s", Index(1)));
  for (Index m : ms)
    for (Index s : ss) cfg.cells.push_back(GridCell{m, s});
  cfg.seeds = j.value("seeds", std::vector<std::uint64_t>{1});
  if (cfg.cells.empty()) throw BadConfig("experiment: empty grid");
  if (cfg.seeds.empty()) throw BadConfig("experiment: empty seed list");
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
    for (std::size_t l = i + 1; l < cfg.seeds.size(); ++l)
      if (cfg.seeds[i] == cfg.seeds[l]) throw BadConfig("experiment: seeds must be distinct");
  cfg.mc_samples = j.value("mc_samples", Index(2000));
  return cfg;
}

struct RunRow {
  GridCell cell;
  std::uint64_t seed = 0;
  double value = 0.0;
  double wall_time_s = 0.0;
  std::string error;  // non-empty when the module call failed for this cell
};

struct RunReport {
  Json config_echo;
  std::string version = kVersion;
  std::vector<RunRow> rows;
  double wall_time_s = 0.0;

  Json to_json() const {
    Json rows_j = Json::array();
    for (const auto& r : rows) {
      Json row{{"m", r.cell.m}, {"s", r.cell.s}, {"seed", r.seed},
               {"value", r.value}, {"wall_time_s", r.wall_time_s}};
      if (!r.error.empty()) row["error"] = r.error;
      rows_j.push_back(row);
    }
    Json cells_j = Json::array();
    for (const auto& [cell, q] : cell_quantiles()) {
      cells_j.push_back(Json{{"m", cell.m}, {"s", cell.s}, {"median", q[1]},
                             {"q25", q[0]}, {"q75", q[2]}});
    }
    return Json{{"version", version},
                {"config", config_echo},
                {"rows", rows_j},
                {"cells", cells_j},
                {"wall_time_s", wall_time_s}};
  }

  // Per-cell (q25, median, q75) with linear interpolation, rows in grid order.
  std::vector<std::pair<GridCell, std::array<double, 3>>> cell_quantiles() const {
    std::vector<std::pair<GridCell, std::array<double, 3>>> out;
    std::vector<double> vals;
    for (std::size_t i = 0; i < rows.size();) {
      const GridCell cell = rows[i].cell;
      vals.clear();
      while (i < rows.size() && rows[i].cell.m == cell.m && rows[i].cell.s == cell.s) {
        if (rows[i].error.empty()) vals.push_back(rows[i].value);
        ++i;
      }
      std::array<double, 3> q{0, 0, 0};
      if (!vals.empty()) {
        std::sort(vals.begin(), vals.end());
        auto interp = [&vals](double p) {
          const double idx = p * static_cast<double>(vals.size() - 1);
          const std::size_t lo = static_cast<std::size_t>(idx);
          const std::size_t hi = std::min(lo + 1, vals.size() - 1);
          const double w = idx - static_cast<double>(lo);
          return vals[lo] * (1.0 - w) + vals[hi] * w;
        };
        q = {interp(0.25), interp(0.5), interp(0.75)};
      }
      out.emplace_back(cell, q);
    }
    return out;
  }
};

namespace detail {

inline std::unique_ptr<SketchOperator> make_sketch(const ExperimentConfig& cfg, Index n,
                                                   const GridCell& cell, std::uint64_t seed) {
  if (cfg.sketch_type == "sjlt")
    return std::make_unique<SjltOperator>(cell.m, n, cell.s,
                                          cfg.sketch_variant == "block"
                                              ? SjltVariant::kBlockCountSketch
                                              : SjltVariant::kUniformNoReplacement,
                                          seed);
  if (cfg.sketch_type == "dense") return std::make_unique<DenseSignOperator>(cell.m, n, seed);
  if (cfg.sketch_type == "fjlt") return std::make_unique<FjltOperator>(n, cell.m, seed);
  throw BadConfig("experiment: unknown sketch type '" + cfg.sketch_type + "'");
}

// Static round-robin over rows; slot writes keep assembly order-independent.
template <typename Fn>
void parallel_rows(Index count, Index threads, Fn&& fn) {
  threads = std::max<Index>(1, std::min<Index>(threads, count));
  if (threads == 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<Index> next{0};
  for (Index t = 0; t < threads; ++t)
    pool.emplace_back([&]() {
      for (;;) {
        const Index i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

// Execute the sweep described by the config: one row per (grid cell x seed),
// sub-seeded and order-normalized so the report does not depend on
// scheduling. Module errors are annotated on the affected row.
inline RunReport run_experiment(const ExperimentConfig& cfg) {
  detail::Stopwatch total;
  RunReport rep;
  rep.config_echo = cfg.raw;

  const Index n_rows = static_cast<Index>(cfg.cells.size() * cfg.seeds.size());
  rep.rows.resize(static_cast<std::size_t>(n_rows));

  std::optional<SetDescriptor> set;
  if (cfg.raw.contains("set")) set = set_from_json(cfg.raw["set"], cfg.base_dir);

  // lsq-bench instances are seed-only, build them once
  std::vector<detail::LassoInstance> instances;
  if (cfg.kind == ExperimentKind::kLsqBench) {
    CalibrationParams gp;
    const Json& g = cfg.raw.at("problem");
    gp.n = g.value("n", Index(128));
    gp.d = g.value("d", Index(16));
    gp.k = g.value("k", Index(3));
    gp.noise = g.value("noise", 0.1);
    instances.resize(cfg.seeds.size());
    detail::parallel_rows(static_cast<Index>(cfg.seeds.size()), cfg.threads, [&](Index i) {
      instances[static_cast<std::size_t>(i)] =
          detail::make_lasso_instance(gp, 0.25, cfg.seeds[static_cast<std::size_t>(i)]);
    });
  }

  auto run_row = [&](Index idx) {
    RunRow& row = rep.rows[static_cast<std::size_t>(idx)];
    const std::size_t cell_idx = static_cast<std::size_t>(idx) / cfg.seeds.size();
    const std::size_t seed_idx = static_cast<std::size_t>(idx) % cfg.seeds.size();
    row.cell = cfg.cells[cell_idx];
    row.seed = cfg.seeds[seed_idx];
    detail::Stopwatch sw;
    try {
      switch (cfg.kind) {
        case ExperimentKind::kDistortionSweep: {
          if (!set) throw BadConfig("distortion-sweep: missing 'set'");
          const Index n = ambient_dim(*set);
          auto op = detail::make_sketch(cfg, n, row.cell, row.seed);
          row.value = distortion_auto(*op, *set, cfg.mc_samples, substream(row.seed, 0xd)).epsilon;
          break;
        }
        case ExperimentKind::kKappaReport: {
          if (!set) throw BadConfig("kappa-report: missing 'set'");
          const Json k = cfg.raw.value("kappa", Json::object());
          const Index outer = k.value("outer", Index(400));
          const Index inner = k.value("inner", Index(200));
          row.value =
              kappa_mc(*set, row.cell.m, row.cell.s, outer, inner, row.seed).kappa;
          break;
        }
        case ExperimentKind::kLsqBench: {
          const auto& inst = instances[seed_idx];
          auto op = detail::make_sketch(cfg, inst.problem.A.rows(), row.cell,
                                        substream(row.seed, 0x0b));
          row.value = solve_sketched(inst.problem, *op).ratio;
          break;
        }
        case ExperimentKind::kCalibrate: {
          const Json cj = cfg.raw.value("calibrate", Json::object());
          CalibrationParams gp;
          gp.n = cj.value("n", Index(64));
          gp.d = cj.value("d", Index(8));
          gp.k = cj.value("k", Index(2));
          gp.set_size = cj.value("set_size", Index(32));
          gp.trials = cj.value("trials", Index(30));
          row.value = calibrate(profile_from_string(cj.value("profile", std::string("subspace"))),
                                gp, cj.value("target_eps", 0.5), cj.value("confidence", 0.5),
                                row.seed)
                          .constant;
          break;
        }
      }
    } catch (const Error& e) {
      row.error = std::string(e.kind()) + " at cell m=" + std::to_string(row.cell.m) +
                  ",s=" + std::to_string(row.cell.s) + ": " + e.what();
    }
    row.wall_time_s = sw.seconds();
  };

  detail::parallel_rows(n_rows, cfg.threads, run_row);
  rep.wall_time_s = total.seconds();
  return rep;
}

// Plot-ready per-cell quantiles; x is the swept m (or s when m is constant).
inline void emit_plot_data(const RunReport& rep, const std::string& path) {
  const auto cells = rep.cell_quantiles();
  bool m_varies = false;
  for (const auto& [cell, q] : cells)
    if (cell.m != cells.front().first.m) m_varies = true;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "x,median,q25,q75\n";
  for (const auto& [cell, q] : cells)
    out << (m_varies ? cell.m : cell.s) << ',' << format_double(q[1]) << ','
        << format_double(q[0]) << ',' << format_double(q[2]) << '\n';
}

}  // namespace sketchlab
