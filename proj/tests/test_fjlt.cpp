#include <catch_amalgamated.hpp>

#include "sketchlab/distortion.hpp"
#include "sketchlab/fjlt.hpp"

using namespace sketchlab;

namespace {

// Dense unnormalized Hadamard matrix by the doubling recursion.
Mat hadamard_dense(Index n) {
  Mat W = Mat::Ones(1, 1);
  while (W.rows() < n) {
    Mat next(2 * W.rows(), 2 * W.cols());
    next << W, W, W, -W;
    W = next;
  }
  return W;
}

Mat fjlt_dense(const FjltOperator& op) {
  const Index n = op.cols();
  const Mat W = hadamard_dense(n);
  Mat D = Mat::Zero(op.rows(), n);
  const double a = 1.0 / std::sqrt(static_cast<double>(op.target_rows()));
  for (Index t = 0; t < op.rows(); ++t)
    for (Index j = 0; j < n; ++j)
      D(t, j) = a * W(op.selected_rows()[static_cast<std::size_t>(t)], j) * op.sign(j);
  return D;
}

}  // namespace

TEST_CASE("full sampling keeps every row and is an isometry", "[fjlt]") {
  FjltOperator op(16, 16, 31);
  REQUIRE(op.rows() == 16);
  Rng rng(9);
  for (int t = 0; t < 5; ++t) {
    Vec x(16);
    for (Index i = 0; i < 16; ++i) x[i] = rng.gaussian();
    CHECK(std::abs(op.apply(x).norm() - x.norm()) <= 1e-10 * x.norm());
  }
  CHECK(op.apply(Vec::Zero(16)).norm() == 0.0);
}

TEST_CASE("selector regression lock and reference draw", "[fjlt]") {
  FjltOperator op(16, 4, 5);
  const std::vector<std::int32_t> frozen{1, 2, 4, 5, 9, 15};
  REQUIRE(op.selected_rows() == frozen);
  REQUIRE(op.redraws() == 0);

  Rng ref(substream(5, 0));
  std::vector<std::int32_t> expect;
  for (Index i = 0; i < 16; ++i)
    if (ref.uniform() < 4.0 / 16.0) expect.push_back(static_cast<std::int32_t>(i));
  REQUIRE(op.selected_rows() == expect);
}

TEST_CASE("apply equals dense materialization", "[fjlt]") {
  Rng rng(77);
  for (const Index n : {Index(2), Index(4), Index(8), Index(32)}) {
    const Index m = std::max<Index>(1, n / 4);
    FjltOperator op(n, m, rng());
    const Mat D = fjlt_dense(op);
    Vec x(n);
    for (Index i = 0; i < n; ++i) x[i] = rng.gaussian();
    const Vec want = D * x;
    CHECK((op.apply(x) - want).norm() <= 1e-10 * (1.0 + want.norm()));
  }
}

TEST_CASE("realized entries are flat at 1/sqrt(m)", "[fjlt]") {
  FjltOperator op(32, 8, 11);
  const Mat D = fjlt_dense(op);
  const double expect = 1.0 / std::sqrt(8.0);
  for (Index i = 0; i < D.rows(); ++i)
    for (Index j = 0; j < D.cols(); ++j) CHECK(std::abs(D(i, j)) == expect);
  // cross-check against the operator itself on basis vectors
  for (Index j = 0; j < 4; ++j) {
    const Vec col = op.apply(Vec::Unit(32, j));
    for (Index i = 0; i < col.size(); ++i) CHECK(std::abs(std::abs(col[i]) - expect) <= 1e-15);
  }
}

TEST_CASE("realized row count is binomial with mean m", "[fjlt]") {
  const Index n = 64, m = 16, draws = 1000;
  double sum = 0.0;
  for (Index t = 0; t < draws; ++t) sum += static_cast<double>(FjltOperator(n, m, 10000 + t).rows());
  const double mean = sum / static_cast<double>(draws);
  const double p = static_cast<double>(m) / static_cast<double>(n);
  const double se = std::sqrt(static_cast<double>(n) * p * (1.0 - p) / static_cast<double>(draws));
  CHECK(std::abs(mean - static_cast<double>(m)) <= 3.0 * se);
}

TEST_CASE("empty selector draw is retried", "[fjlt]") {
  bool found = false;
  for (std::uint64_t seed = 0; seed < 200 && !found; ++seed) {
    FjltOperator op(2, 1, seed);
    REQUIRE(op.rows() >= 1);
    found = op.redraws() > 0;
  }
  CHECK(found);
}

TEST_CASE("build and apply errors", "[fjlt]") {
  CHECK_THROWS_AS(FjltOperator(12, 4, 0), BadDimension);
  CHECK_THROWS_AS(FjltOperator(16, 0, 0), MOutOfRange);
  CHECK_THROWS_AS(FjltOperator(16, 17, 0), MOutOfRange);
  FjltOperator op(16, 4, 0);
  CHECK_THROWS_AS(op.apply(Vec::Zero(8)), DimensionMismatch);
}

TEST_CASE("distortion on a finite set shrinks as m grows", "[fjlt]") {
  const Index n = 128;
  Rng rng(4242);
  Mat P(n, 100);
  for (Index c = 0; c < P.cols(); ++c) {
    for (Index i = 0; i < n; ++i) P(i, c) = rng.gaussian();
    P.col(c).normalize();
  }
  const FiniteSet T(P);
  std::vector<double> medians;
  for (const Index m : {Index(8), Index(16), Index(32), Index(64)}) {
    std::vector<double> eps;
    for (std::uint64_t seed = 0; seed < 11; ++seed)
      eps.push_back(distortion_finite(FjltOperator(n, m, 1000 * m + seed), T).epsilon);
    std::sort(eps.begin(), eps.end());
    medians.push_back(eps[5]);
  }
  for (std::size_t i = 0; i + 1 < medians.size(); ++i) CHECK(medians[i] > medians[i + 1]);
  // slope of log median vs log m around -1/2
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double ms[4] = {8, 16, 32, 64};
  for (int i = 0; i < 4; ++i) {
    const double x = std::log(ms[i]), y = std::log(medians[static_cast<std::size_t>(i)]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double slope = (4 * sxy - sx * sy) / (4 * sxx - sx * sx);
  CHECK(slope > -0.65);
  CHECK(slope < -0.35);
}
