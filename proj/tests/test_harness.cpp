#include <catch_amalgamated.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sketchlab/experiment.hpp"
#include "sketchlab/sketchlab.hpp"

using namespace sketchlab;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("sketchlab_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

}  // namespace

TEST_CASE("csv parsing", "[harness]") {
  TempDir dir;
  write_text(dir.file("a.csv"), "1,2\n3,4\n");
  const Mat M = parse_matrix_csv(dir.file("a.csv"));
  REQUIRE(M.rows() == 2);
  REQUIRE(M.cols() == 2);
  CHECK(M(0, 0) == 1.0);
  CHECK(M(1, 1) == 4.0);

  write_text(dir.file("sci.csv"), "1e-3,2.5E+2\n-3.25,0.0\n");
  const Mat S = parse_matrix_csv(dir.file("sci.csv"));
  CHECK(S(0, 0) == 1e-3);
  CHECK(S(0, 1) == 250.0);

  write_text(dir.file("empty.csv"), "");
  CHECK_THROWS_AS(parse_matrix_csv(dir.file("empty.csv")), IoError);
  write_text(dir.file("ragged.csv"), "1,2\n3\n");
  CHECK_THROWS_AS(parse_matrix_csv(dir.file("ragged.csv")), RaggedRows);
  write_text(dir.file("alpha.csv"), "1,x\n");
  CHECK_THROWS_AS(parse_matrix_csv(dir.file("alpha.csv")), NonNumeric);
  CHECK_THROWS_AS(parse_matrix_csv(dir.file("missing.csv")), IoError);
}

TEST_CASE("csv round trip is lossless", "[harness]") {
  TempDir dir;
  Rng rng(1);
  Mat M(20, 7);
  for (Index i = 0; i < M.size(); ++i) M.data()[i] = rng.gaussian() * std::pow(10.0, static_cast<double>(rng.below(20)) - 10.0);
  write_matrix_csv(dir.file("m.csv"), M);
  const Mat back = parse_matrix_csv(dir.file("m.csv"));
  REQUIRE(back.rows() == M.rows());
  REQUIRE(back.cols() == M.cols());
  for (Index i = 0; i < M.size(); ++i) REQUIRE(back.data()[i] == M.data()[i]);
}

TEST_CASE("vector csv accepts rows or columns", "[harness]") {
  TempDir dir;
  write_text(dir.file("row.csv"), "1,2,3\n");
  write_text(dir.file("col.csv"), "1\n2\n3\n");
  write_text(dir.file("mat.csv"), "1,2\n3,4\n");
  CHECK(parse_vector_csv(dir.file("row.csv")).size() == 3);
  CHECK(parse_vector_csv(dir.file("col.csv")).size() == 3);
  CHECK_THROWS_AS(parse_vector_csv(dir.file("mat.csv")), BadDimension);
}

TEST_CASE("set descriptors load from json with csv references", "[harness]") {
  TempDir dir;
  // points are rows in the csv
  write_text(dir.file("pts.csv"), "1,0,0\n0,1,0\n");
  const auto fin = set_from_json(Json{{"type", "finite"}, {"points", "pts.csv"}}, dir.path.string());
  CHECK(ambient_dim(fin) == 3);
  CHECK(std::get<FiniteSet>(fin).points.cols() == 2);

  Mat U = Mat::Identity(4, 2);
  write_matrix_csv(dir.file("u.csv"), U);
  const auto sub = set_from_json(Json{{"type", "subspace"}, {"basis", "u.csv"}}, dir.path.string());
  CHECK(ambient_dim(sub) == 4);

  const auto ks = set_from_json(Json{{"type", "ksparse"}, {"n", 6}, {"k", 2}}, "");
  CHECK(std::get<KSparseCap>(ks).k == 2);

  write_matrix_csv(dir.file("u2.csv"), Mat(Mat::Identity(4, 1)));
  const auto un = set_from_json(
      Json{{"type", "union"}, {"bases", {"u.csv", "u2.csv"}}}, dir.path.string());
  CHECK(std::get<UnionOfSubspaces>(un).bases.size() == 2);

  CHECK_THROWS_AS(set_from_json(Json{{"type", "nope"}}, ""), UnsupportedDescriptor);
}

TEST_CASE("single cell sweep equals the direct call", "[harness]") {
  TempDir dir;
  Mat U = Mat::Identity(16, 3);
  write_matrix_csv(dir.file("u.csv"), U);
  Json cfg{{"kind", "distortion-sweep"},
           {"set", {{"type", "subspace"}, {"basis", "u.csv"}}},
           {"sketch", {{"type", "sjlt"}, {"variant", "uniform"}}},
           {"grid", {{"m", {8}}, {"s", {2}}}},
           {"seeds", {5}}};
  const auto rep = run_experiment(parse_experiment_config(cfg, dir.path.string()));
  REQUIRE(rep.rows.size() == 1);
  SjltOperator op(8, 16, 2, SjltVariant::kUniformNoReplacement, 5);
  const double direct = distortion_subspace(op, Subspace(U)).epsilon;
  CHECK(rep.rows[0].value == direct);
  CHECK(rep.rows[0].error.empty());
}

TEST_CASE("grid order does not change row content", "[harness]") {
  TempDir dir;
  Mat U = Mat::Identity(16, 3);
  write_matrix_csv(dir.file("u.csv"), U);
  auto make = [&](std::vector<Index> ms) {
    Json cfg{{"kind", "distortion-sweep"},
             {"set", {{"type", "subspace"}, {"basis", "u.csv"}}},
             {"grid", {{"m", ms}, {"s", {2}}}},
             {"seeds", {1, 2, 3}}};
    return run_experiment(parse_experiment_config(cfg, dir.path.string()));
  };
  auto a = make({8, 12});
  auto b = make({12, 8});
  auto key = [](const RunRow& r) {
    return std::make_tuple(r.cell.m, r.cell.s, r.seed, r.value);
  };
  std::vector<std::tuple<Index, Index, std::uint64_t, double>> ka, kb;
  for (const auto& r : a.rows) ka.push_back(key(r));
  for (const auto& r : b.rows) kb.push_back(key(r));
  std::sort(ka.begin(), ka.end());
  std::sort(kb.begin(), kb.end());
  CHECK(ka == kb);
}

TEST_CASE("experiments are deterministic across thread counts", "[harness]") {
  TempDir dir;
  Mat U = Mat::Identity(32, 4);
  write_matrix_csv(dir.file("u.csv"), U);
  Json cfg{{"kind", "distortion-sweep"},
           {"set", {{"type", "subspace"}, {"basis", "u.csv"}}},
           {"grid", {{"m", {8, 16, 24}}, {"s", {2}}}},
           {"seeds", {1, 2, 3, 4}}};
  auto c1 = parse_experiment_config(cfg, dir.path.string());
  c1.threads = 1;
  auto c2 = parse_experiment_config(cfg, dir.path.string());
  c2.threads = 4;
  const auto r1 = run_experiment(c1);
  const auto r2 = run_experiment(c2);
  REQUIRE(r1.rows.size() == r2.rows.size());
  for (std::size_t i = 0; i < r1.rows.size(); ++i) {
    CHECK(r1.rows[i].value == r2.rows[i].value);
    CHECK(r1.rows[i].seed == r2.rows[i].seed);
  }
  // serialized rows and cells are byte-identical (wall times differ)
  auto strip = [](Json j) {
    j["wall_time_s"] = 0;
    for (auto& row : j["rows"]) row["wall_time_s"] = 0;
    return j.dump();
  };
  CHECK(strip(r1.to_json()) == strip(r2.to_json()));
}

TEST_CASE("plot data emission", "[harness]") {
  TempDir dir;
  Mat U = Mat::Identity(16, 2);
  write_matrix_csv(dir.file("u.csv"), U);
  Json cfg{{"kind", "distortion-sweep"},
           {"set", {{"type", "subspace"}, {"basis", "u.csv"}}},
           {"grid", {{"m", {4, 8}}, {"s", {1}}}},
           {"seeds", {1, 2, 3, 4, 5}}};
  const auto rep = run_experiment(parse_experiment_config(cfg, dir.path.string()));
  emit_plot_data(rep, dir.file("plot.csv"));
  std::ifstream f(dir.file("plot.csv"));
  std::string header;
  std::getline(f, header);
  CHECK(header == "x,median,q25,q75");
  int lines = 0;
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 2);
}

TEST_CASE("module failures annotate the affected cell", "[harness]") {
  TempDir dir;
  Mat U = Mat::Identity(16, 3);
  write_matrix_csv(dir.file("u.csv"), U);
  Json cfg{{"kind", "distortion-sweep"},
           {"set", {{"type", "subspace"}, {"basis", "u.csv"}}},
           {"grid", {{"m", {8, 0}}, {"s", {2}}}},
           {"seeds", {1}}};
  const auto rep = run_experiment(parse_experiment_config(cfg, dir.path.string()));
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].error.empty());
  CHECK(!rep.rows[1].error.empty());
  CHECK(rep.rows[1].error.find("m=0") != std::string::npos);
}

TEST_CASE("config validation", "[harness]") {
  CHECK_THROWS_AS(parse_experiment_config(Json{{"kind", "weird"}}, ""), BadConfig);
  Json dup{{"kind", "distortion-sweep"}, {"grid", {{"m", {8}}}}, {"seeds", {1, 1}}};
  CHECK_THROWS_AS(parse_experiment_config(dup, ""), BadConfig);
}

TEST_CASE("advisor plan json round trip", "[harness]") {
  AdvisorInputs in;
  in.n = 1024;
  in.d = 16;
  in.eps = 0.5;
  in.mu = 0.125;
  const auto plan = advise(Profile::kSubspace, in);
  const Json j = plan_to_json(plan);
  CHECK(j["m"] == 1596);
  CHECK(j["profile"] == "subspace");
  const AdvisorInputs back = inputs_from_json(j["inputs"]);
  CHECK(*back.d == 16.0);
  CHECK(!back.k.has_value());
}
