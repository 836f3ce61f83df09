#include <catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sketchlab/csv.hpp"
#include "sketchlab/serialize.hpp"

using namespace sketchlab;

namespace {

struct CliRun {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int c = 0;
    path = std::filesystem::temp_directory_path() /
           ("sketchlab_cli_" + std::to_string(::getpid()) + "_" + std::to_string(c++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

CliRun run_cli(const TempDir& dir, const std::string& args) {
  const std::string out = dir.file("stdout.txt");
  const std::string err = dir.file("stderr.txt");
  const std::string cmd =
      std::string(SKETCHLAB_CLI_PATH) + " " + args + " >" + out + " 2>" + err;
  const int rc = std::system(cmd.c_str());
  CliRun r;
  r.exit_code = WEXITSTATUS(rc);
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

}  // namespace

TEST_CASE("advise subcommand emits a plan", "[cli]") {
  TempDir dir;
  write_text(dir.file("in.json"),
             R"({"profile":"subspace","inputs":{"n":1024,"d":16,"eps":0.5,"mu":0.125}})");
  const auto r = run_cli(dir, "--out " + dir.file("plan.json") + " advise --input " + dir.file("in.json"));
  REQUIRE(r.exit_code == 0);
  const Json plan = Json::parse(slurp(dir.file("plan.json")));
  CHECK(plan["m"] == 1596);
  CHECK(plan["s"] == 45);
}

TEST_CASE("sketch-apply preserves unit columns", "[cli]") {
  TempDir dir;
  write_matrix_csv(dir.file("x.csv"), Mat(Mat::Identity(16, 16)));
  const auto r = run_cli(dir, "--seed 9 sketch-apply --sketch sjlt --m 8 --s 2 --matrix " +
                                  dir.file("x.csv") + " --out-csv " + dir.file("y.csv"));
  REQUIRE(r.exit_code == 0);
  const Mat Y = parse_matrix_csv(dir.file("y.csv"));
  REQUIRE(Y.rows() == 8);
  REQUIRE(Y.cols() == 16);
  for (Index j = 0; j < 16; ++j) CHECK(std::abs(Y.col(j).norm() - 1.0) <= 1e-12);
}

TEST_CASE("distortion subcommand reports the method", "[cli]") {
  TempDir dir;
  write_matrix_csv(dir.file("u.csv"), Mat(Mat::Identity(16, 3)));
  write_text(dir.file("set.json"), R"({"type":"subspace","basis":"u.csv"})");
  const auto r = run_cli(dir, "--seed 4 --out " + dir.file("rep.json") +
                                  " distortion --set " + dir.file("set.json") +
                                  " --m 8 --s 2 --delta-diameter");
  REQUIRE(r.exit_code == 0);
  const Json rep = Json::parse(slurp(dir.file("rep.json")));
  CHECK(rep["method"] == "exact_spectral");
  CHECK(rep["epsilon"].get<double>() >= 0.0);
  CHECK(rep.contains("delta_diameter"));
}

TEST_CASE("lsq subcommand solves and reports", "[cli]") {
  TempDir dir;
  Rng rng(5);
  Mat A(24, 4);
  for (Index i = 0; i < A.size(); ++i) A.data()[i] = rng.gaussian();
  Vec b(24);
  for (Index i = 0; i < 24; ++i) b[i] = rng.gaussian();
  write_matrix_csv(dir.file("A.csv"), A);
  write_matrix_csv(dir.file("b.csv"), b);
  const auto r = run_cli(dir, "--seed 11 --out " + dir.file("rep.json") +
                                  " lsq --matrix " + dir.file("A.csv") + " --rhs " +
                                  dir.file("b.csv") + " --m 12 --s 3");
  REQUIRE(r.exit_code == 0);
  const Json rep = Json::parse(slurp(dir.file("rep.json")));
  CHECK(rep["ratio"].get<double>() >= 1.0 - 1e-9);
  CHECK(rep.contains("z1"));
  CHECK(rep["lemma_bound_satisfied"] == true);
}

TEST_CASE("bad configuration exits with code 2 and structured stderr", "[cli]") {
  TempDir dir;
  const auto r = run_cli(dir, "advise --input " + dir.file("absent.json"));
  CHECK(r.exit_code == 2);
  const Json err = Json::parse(r.err);
  CHECK(err.contains("error"));
  CHECK(err["error"]["type"] == "IoError");
}

TEST_CASE("numeric failures exit with code 3", "[cli]") {
  TempDir dir;
  write_text(dir.file("in.json"),
             R"({"profile":"subspace","inputs":{"n":64,"d":4,"eps":0.25,"mu":0.5},)"
             R"("constants":{"c_m":1e300}})");
  const auto r = run_cli(dir, "advise --input " + dir.file("in.json"));
  CHECK(r.exit_code == 3);
  const Json err = Json::parse(r.err);
  CHECK(err["error"]["type"] == "NoFixedPoint");
}

TEST_CASE("bench runs a sweep and emits plot data", "[cli]") {
  TempDir dir;
  write_matrix_csv(dir.file("u.csv"), Mat(Mat::Identity(16, 2)));
  write_text(dir.file("cfg.json"), R"({
    "kind": "distortion-sweep",
    "set": {"type": "subspace", "basis": "u.csv"},
    "grid": {"m": [4, 8], "s": [1]},
    "seeds": [1, 2, 3]
  })");
  const auto r = run_cli(dir, "--threads 2 --out " + dir.file("rep.json") + " bench --config " +
                                  dir.file("cfg.json") + " --plot " + dir.file("plot.csv"));
  REQUIRE(r.exit_code == 0);
  const Json rep = Json::parse(slurp(dir.file("rep.json")));
  CHECK(rep["rows"].size() == 6);
  const std::string plot = slurp(dir.file("plot.csv"));
  CHECK(plot.rfind("x,median,q25,q75\n", 0) == 0);
}
