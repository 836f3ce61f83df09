#include <catch_amalgamated.hpp>

#include "sketchlab/serialize.hpp"
#include "sketchlab/sketch_core.hpp"

using namespace sketchlab;

namespace {

// Straightforward re-implementation of the column sampler: fresh index vector
// per column, partial shuffle, sort, then sign draws. Shares only the RNG
// stream contract with the library.
struct RefColumn {
  std::vector<Index> rows;
  std::vector<double> signs;
};

RefColumn reference_column(Index m, Index s, SjltVariant variant, std::uint64_t seed, Index j) {
  Rng rng(substream(seed, static_cast<std::uint64_t>(j)));
  RefColumn out;
  if (variant == SjltVariant::kUniformNoReplacement) {
    std::vector<Index> idx(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (Index t = 0; t < s; ++t) {
      const Index pick = t + static_cast<Index>(rng.below(static_cast<std::uint64_t>(m - t)));
      std::swap(idx[static_cast<std::size_t>(t)], idx[static_cast<std::size_t>(pick)]);
    }
    out.rows.assign(idx.begin(), idx.begin() + s);
    std::sort(out.rows.begin(), out.rows.end());
  } else {
    const Index block = m / s;
    for (Index g = 0; g < s; ++g)
      out.rows.push_back(g * block + static_cast<Index>(rng.below(static_cast<std::uint64_t>(block))));
  }
  for (Index t = 0; t < s; ++t) out.signs.push_back(rng.sign_bit() ? -1.0 : 1.0);
  return out;
}

}  // namespace

TEST_CASE("s = m selects every row with entries +-1/sqrt(s)", "[sketch_core]") {
  for (auto variant : {SjltVariant::kUniformNoReplacement, SjltVariant::kBlockCountSketch}) {
    SjltOperator op(4, 3, 4, variant, 123);
    const Mat D = op.materialize();
    for (Index j = 0; j < 3; ++j)
      for (Index i = 0; i < 4; ++i) CHECK(std::abs(std::abs(D(i, j)) - 0.5) < 1e-15);
  }
}

TEST_CASE("block variant selects one row per block", "[sketch_core]") {
  SjltOperator op(8, 5, 2, SjltVariant::kBlockCountSketch, 7);
  for (Index j = 0; j < 5; ++j) {
    CHECK(op.row_index(j, 0) >= 0);
    CHECK(op.row_index(j, 0) < 4);
    CHECK(op.row_index(j, 1) >= 4);
    CHECK(op.row_index(j, 1) < 8);
  }
}

TEST_CASE("pattern regression lock and reference sampler", "[sketch_core]") {
  SjltOperator op(16, 8, 4, SjltVariant::kUniformNoReplacement, 42);
  const Index frozen_rows[8][4] = {{0, 6, 7, 15}, {1, 3, 8, 12},  {1, 4, 7, 15}, {2, 4, 8, 12},
                                   {7, 11, 13, 14}, {2, 3, 10, 14}, {1, 10, 12, 13}, {2, 5, 7, 11}};
  const double frozen_signs[8][4] = {{+1, -1, +1, -1}, {+1, -1, -1, +1}, {-1, +1, +1, -1},
                                     {+1, -1, +1, -1}, {+1, -1, -1, +1}, {+1, +1, +1, +1},
                                     {+1, -1, -1, +1}, {+1, -1, +1, -1}};
  for (Index j = 0; j < 8; ++j)
    for (Index t = 0; t < 4; ++t) {
      CHECK(op.row_index(j, t) == frozen_rows[j][t]);
      CHECK(op.sign(j, t) == frozen_signs[j][t]);
    }

  for (const auto& [m, n, s, variant, seed] :
       {std::tuple<Index, Index, Index, SjltVariant, std::uint64_t>{16, 8, 4, SjltVariant::kUniformNoReplacement, 42},
        {64, 20, 5, SjltVariant::kUniformNoReplacement, 1},
        {24, 10, 6, SjltVariant::kBlockCountSketch, 999}}) {
    SjltOperator o(m, n, s, variant, seed);
    for (Index j = 0; j < n; ++j) {
      const auto ref = reference_column(m, s, variant, seed, j);
      for (Index t = 0; t < s; ++t) {
        REQUIRE(o.row_index(j, t) == ref.rows[static_cast<std::size_t>(t)]);
        REQUIRE(o.sign(j, t) == ref.signs[static_cast<std::size_t>(t)]);
      }
    }
  }
}

TEST_CASE("columns have exactly s nonzeros of unit total norm", "[sketch_core]") {
  Rng meta(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const Index m = 2 + static_cast<Index>(meta.below(60));
    const Index n = 1 + static_cast<Index>(meta.below(30));
    Index s = 1 + static_cast<Index>(meta.below(static_cast<std::uint64_t>(m)));
    const bool block = meta.sign_bit();
    if (block)
      while (m % s != 0) --s;
    SjltOperator op(m, n, s, block ? SjltVariant::kBlockCountSketch : SjltVariant::kUniformNoReplacement,
                    meta());
    for (Index j = 0; j < n; ++j) {
      for (Index t = 0; t + 1 < s; ++t) REQUIRE(op.row_index(j, t) < op.row_index(j, t + 1));
      CHECK(std::abs(op.apply(Vec::Unit(n, j)).norm() - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("apply matches dense materialization", "[sketch_core]") {
  Rng meta(42);
  SjltOperator op(16, 8, 4, SjltVariant::kUniformNoReplacement, 42);
  const Mat D = op.materialize();
  Vec x(8);
  for (Index i = 0; i < 8; ++i) x[i] = meta.gaussian();
  CHECK((op.apply(x) - D * x).norm() <= 1e-10 * (D * x).norm());

  Mat X(8, 5);
  for (Index i = 0; i < X.size(); ++i) X.data()[i] = meta.gaussian();
  CHECK((op.apply_matrix(X) - D * X).norm() <= 1e-10 * (D * X).norm());

  DenseSignOperator dop(12, 8, 99);
  const Mat Dd = dop.materialize();
  CHECK((dop.apply(x) - Dd * x).norm() <= 1e-10 * (Dd * x).norm());
}

TEST_CASE("apply is linear", "[sketch_core]") {
  SjltOperator op(32, 16, 4, SjltVariant::kUniformNoReplacement, 5);
  Rng rng(17);
  for (int t = 0; t < 10; ++t) {
    Vec x(16), y(16);
    for (Index i = 0; i < 16; ++i) x[i] = rng.gaussian(), y[i] = rng.gaussian();
    const double a = rng.gaussian(), b = rng.gaussian();
    const Vec lhs = op.apply(a * x + b * y);
    const Vec rhs = a * op.apply(x) + b * op.apply(y);
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + rhs.norm()));
  }
}

TEST_CASE("same parameters give bit-identical operators", "[sketch_core]") {
  SjltOperator a(32, 10, 3, SjltVariant::kUniformNoReplacement, 77);
  SjltOperator b(32, 10, 3, SjltVariant::kUniformNoReplacement, 77);
  for (Index j = 0; j < 10; ++j)
    for (Index t = 0; t < 3; ++t) {
      REQUIRE(a.row_index(j, t) == b.row_index(j, t));
      REQUIRE(a.sign(j, t) == b.sign(j, t));
    }
  Vec x = Vec::LinSpaced(10, -1.0, 1.0);
  REQUIRE(a.apply(x) == b.apply(x));
}

TEST_CASE("zero and unit inputs", "[sketch_core]") {
  SjltOperator op(16, 6, 2, SjltVariant::kBlockCountSketch, 3);
  CHECK(op.apply(Vec::Zero(6)).norm() == 0.0);
  const Mat Y = op.apply_matrix(Mat::Identity(6, 6));
  for (Index j = 0; j < 6; ++j) CHECK(std::abs(Y.col(j).norm() - 1.0) <= 1e-12);
  CHECK(op.apply_matrix(Mat::Zero(6, 4)).norm() == 0.0);
}

TEST_CASE("expected square norm check", "[sketch_core]") {
  const SjltParams params{16, 8, 4, SjltVariant::kUniformNoReplacement};
  const auto zero = expected_square_norm_check(params, Vec::Zero(8), 10, 1);
  CHECK(zero.mean == 0.0);
  CHECK(zero.standard_error == 0.0);

  const auto unit = expected_square_norm_check(params, Vec::Unit(8, 0), 50, 2);
  CHECK(std::abs(unit.mean - 1.0) <= 1e-12);
  CHECK(unit.standard_error <= 1e-12);

  Vec flat = Vec::Constant(8, 1.0 / std::sqrt(8.0));
  const auto fc = expected_square_norm_check(params, flat, 2000, 3);
  CHECK(std::abs(fc.mean - 1.0) <= 4.0 * fc.standard_error);

  CHECK_THROWS_AS(expected_square_norm_check(params, flat, 1, 3), InsufficientSamples);
}

TEST_CASE("construction and apply errors", "[sketch_core]") {
  CHECK_THROWS_AS(SjltOperator(4, 3, 5, SjltVariant::kUniformNoReplacement, 0), InvalidSparsity);
  CHECK_THROWS_AS(SjltOperator(8, 3, 3, SjltVariant::kBlockCountSketch, 0), InvalidSparsity);
  CHECK_THROWS_AS(SjltOperator(0, 3, 1, SjltVariant::kUniformNoReplacement, 0), ZeroDimension);
  SjltOperator op(4, 3, 2, SjltVariant::kUniformNoReplacement, 0);
  CHECK_THROWS_AS(op.apply(Vec::Zero(5)), DimensionMismatch);
  CHECK_THROWS_AS(op.apply_matrix(Mat::Zero(5, 2)), DimensionMismatch);
}

TEST_CASE("block variant pair selection frequencies", "[sketch_core]") {
  // columns are i.i.d. draws; rows 0 and 1 share a block, rows 0 and 4 do not
  const Index n = 100000;
  SjltOperator op(8, n, 2, SjltVariant::kBlockCountSketch, 2718);
  Index both_same_block = 0, both_cross_block = 0;
  for (Index j = 0; j < n; ++j) {
    bool has0 = false, has1 = false, has4 = false;
    for (Index t = 0; t < 2; ++t) {
      has0 = has0 || op.row_index(j, t) == 0;
      has1 = has1 || op.row_index(j, t) == 1;
      has4 = has4 || op.row_index(j, t) == 4;
    }
    both_same_block += (has0 && has1) ? 1 : 0;
    both_cross_block += (has0 && has4) ? 1 : 0;
  }
  CHECK(both_same_block == 0);
  const double p = static_cast<double>(both_cross_block) / static_cast<double>(n);
  const double expect = 1.0 / 16.0;
  const double se = std::sqrt(expect * (1.0 - expect) / static_cast<double>(n));
  CHECK(std::abs(p - expect) <= 4.0 * se);
}

TEST_CASE("json descriptor regenerates the pattern", "[sketch_core]") {
  SjltOperator op(24, 9, 3, SjltVariant::kBlockCountSketch, 555);
  const Json j = sketch_to_json(op);
  auto clone = sketch_from_json(j);
  auto* sj = dynamic_cast<SjltOperator*>(clone.get());
  REQUIRE(sj != nullptr);
  for (Index col = 0; col < 9; ++col)
    for (Index t = 0; t < 3; ++t) {
      REQUIRE(sj->row_index(col, t) == op.row_index(col, t));
      REQUIRE(sj->sign(col, t) == op.sign(col, t));
    }
  CHECK_FALSE(j.contains("pattern"));
  CHECK_FALSE(j.contains("rows_"));
}
