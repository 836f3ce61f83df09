#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sketchlab/errors.hpp"
#include "sketchlab/prng.hpp"

namespace sketchlab {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr Index kMaxDimension = Index(1) << 28;

// A realized random embedding R^n -> R^m with frozen randomness. Immutable
// after construction and safe to share across threads.
class SketchOperator {
 public:
  virtual ~SketchOperator() = default;

  virtual Index rows() const noexcept = 0;
  virtual Index cols() const noexcept = 0;

  Vec apply(const Vec& x) const {
    if (x.size() != cols())
      throw DimensionMismatch("apply: vector length " + std::to_string(x.size()) +
                              " != operator columns " + std::to_string(cols()));
    Vec y = Vec::Zero(rows());
    apply_into(x, y);
    return y;
  }

  // Column-wise application.
  Mat apply_matrix(const Mat& X) const {
    if (X.rows() != cols())
      throw DimensionMismatch("apply_matrix: matrix rows " + std::to_string(X.rows()) +
                              " != operator columns " + std::to_string(cols()));
    Mat Y = Mat::Zero(rows(), X.cols());
    Vec col(rows());
    for (Index c = 0; c < X.cols(); ++c) {
      col.setZero();
      apply_into(X.col(c), col);
      Y.col(c) = col;
    }
    return Y;
  }

 protected:
  // y is pre-sized to rows() and zeroed; implementations accumulate into it.
  virtual void apply_into(const Eigen::Ref<const Vec>& x,
                          Eigen::Ref<Vec> y) const = 0;
};

enum class SjltVariant { kUniformNoReplacement, kBlockCountSketch };

inline std::string to_string(SjltVariant v) {
  return v == SjltVariant::kUniformNoReplacement ? "uniform" : "block";
}

// Sparse embedding with exactly s nonzero entries +-1/sqrt(s) per column.
// Column j is generated from substream(seed, j), so the realized pattern is a
// pure function of (m, n, s, variant, seed) and independent of scheduling.
class SjltOperator final : public SketchOperator {
 public:
  SjltOperator(Index m, Index n, Index s, SjltVariant variant, std::uint64_t seed)
      : m_(m), n_(n), s_(s), variant_(variant), seed_(seed) {
    if (m <= 0 || n <= 0) throw ZeroDimension("sjlt: m and n must be positive");
    if (m > kMaxDimension || n > kMaxDimension)
      throw BadDimension("sjlt: dimension exceeds configured maximum");
    if (s <= 0 || s > m)
      throw InvalidSparsity("sjlt: need 1 <= s <= m, got s=" + std::to_string(s) +
                            ", m=" + std::to_string(m));
    if (variant == SjltVariant::kBlockCountSketch && m % s != 0)
      throw InvalidSparsity("sjlt: block variant needs s | m, got s=" +
                            std::to_string(s) + ", m=" + std::to_string(m));
    rows_.resize(static_cast<std::size_t>(s) * static_cast<std::size_t>(n));
    sign_bits_.assign((rows_.size() + 63) / 64, 0);

    std::vector<std::int32_t> buf;
    std::vector<Index> picks;
    if (variant == SjltVariant::kUniformNoReplacement) {
      buf.resize(static_cast<std::size_t>(m));
      for (Index i = 0; i < m; ++i) buf[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(i);
      picks.resize(static_cast<std::size_t>(s));
    }
    const Index block = (variant == SjltVariant::kBlockCountSketch) ? m / s : 0;

    for (Index j = 0; j < n; ++j) {
      Rng rng(substream(seed, static_cast<std::uint64_t>(j)));
      std::int32_t* col = rows_.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(s);
      if (variant == SjltVariant::kUniformNoReplacement) {
        // Partial Fisher-Yates over [0, m): first s entries are a uniform
        // sample without replacement. Swaps are undone afterwards so the
        // buffer is the identity again for the next column.
        for (Index t = 0; t < s; ++t) {
          const Index pick = t + static_cast<Index>(rng.below(static_cast<std::uint64_t>(m - t)));
          picks[static_cast<std::size_t>(t)] = pick;
          std::swap(buf[static_cast<std::size_t>(t)], buf[static_cast<std::size_t>(pick)]);
          col[t] = buf[static_cast<std::size_t>(t)];
        }
        for (Index t = s - 1; t >= 0; --t)
          std::swap(buf[static_cast<std::size_t>(t)], buf[static_cast<std::size_t>(picks[static_cast<std::size_t>(t)])]);
        std::sort(col, col + s);
      } else {
        for (Index g = 0; g < s; ++g)
          col[g] = static_cast<std::int32_t>(g * block +
                   static_cast<Index>(rng.below(static_cast<std::uint64_t>(block))));
      }
      for (Index t = 0; t < s; ++t)
        if (rng.sign_bit()) set_sign_bit(static_cast<std::size_t>(j) * static_cast<std::size_t>(s) + static_cast<std::size_t>(t));
    }
  }

  Index rows() const noexcept override { return m_; }
  Index cols() const noexcept override { return n_; }
  Index sparsity() const noexcept { return s_; }
  SjltVariant variant() const noexcept { return variant_; }
  std::uint64_t seed() const noexcept { return seed_; }

  // Row index of the t-th nonzero of column j (ascending in t).
  Index row_index(Index j, Index t) const {
    return rows_[static_cast<std::size_t>(j) * static_cast<std::size_t>(s_) + static_cast<std::size_t>(t)];
  }
  // Sign (+1/-1) of the t-th nonzero of column j.
  double sign(Index j, Index t) const {
    const std::size_t bit = static_cast<std::size_t>(j) * static_cast<std::size_t>(s_) + static_cast<std::size_t>(t);
    return (sign_bits_[bit >> 6] >> (bit & 63)) & 1 ? -1.0 : 1.0;
  }

  Mat materialize() const {
    Mat D = Mat::Zero(m_, n_);
    const double a = 1.0 / std::sqrt(static_cast<double>(s_));
    for (Index j = 0; j < n_; ++j)
      for (Index t = 0; t < s_; ++t) D(row_index(j, t), j) = sign(j, t) * a;
    return D;
  }

 protected:
  void apply_into(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const override {
    const double a = 1.0 / std::sqrt(static_cast<double>(s_));
    for (Index j = 0; j < n_; ++j) {
      const double xj = x[j];
      if (xj == 0.0) continue;
      const std::int32_t* col = rows_.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(s_);
      for (Index t = 0; t < s_; ++t) y[col[t]] += sign(j, t) * xj;
    }
    y *= a;
  }

 private:
  void set_sign_bit(std::size_t bit) { sign_bits_[bit >> 6] |= std::uint64_t(1) << (bit & 63); }

  Index m_, n_, s_;
  SjltVariant variant_;
  std::uint64_t seed_;
  std::vector<std::int32_t> rows_;       // column-major, s entries per column
  std::vector<std::uint64_t> sign_bits_; // packed, bit set => -1
};

// Dense i.i.d. +-1/sqrt(m) embedding; the s = m baseline.
class DenseSignOperator final : public SketchOperator {
 public:
  DenseSignOperator(Index m, Index n, std::uint64_t seed)
      : m_(m), n_(n), seed_(seed) {
    if (m <= 0 || n <= 0) throw ZeroDimension("dense sketch: m and n must be positive");
    sign_bits_.assign((static_cast<std::size_t>(m) * static_cast<std::size_t>(n) + 63) / 64, 0);
    for (Index j = 0; j < n; ++j) {
      Rng rng(substream(seed, static_cast<std::uint64_t>(j)));
      for (Index i = 0; i < m; ++i) {
        if (rng.sign_bit()) {
          const std::size_t bit = static_cast<std::size_t>(j) * static_cast<std::size_t>(m) + static_cast<std::size_t>(i);
          sign_bits_[bit >> 6] |= std::uint64_t(1) << (bit & 63);
        }
      }
    }
  }

  Index rows() const noexcept override { return m_; }
  Index cols() const noexcept override { return n_; }
  std::uint64_t seed() const noexcept { return seed_; }

  double entry_sign(Index i, Index j) const {
    const std::size_t bit = static_cast<std::size_t>(j) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(i);
    return (sign_bits_[bit >> 6] >> (bit & 63)) & 1 ? -1.0 : 1.0;
  }

  Mat materialize() const {
    Mat D(m_, n_);
    const double a = 1.0 / std::sqrt(static_cast<double>(m_));
    for (Index j = 0; j < n_; ++j)
      for (Index i = 0; i < m_; ++i) D(i, j) = entry_sign(i, j) * a;
    return D;
  }

 protected:
  void apply_into(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const override {
    const double a = 1.0 / std::sqrt(static_cast<double>(m_));
    for (Index j = 0; j < n_; ++j) {
      const double xj = x[j];
      if (xj == 0.0) continue;
      for (Index i = 0; i < m_; ++i) y[i] += entry_sign(i, j) * xj;
    }
    y *= a;
  }

 private:
  Index m_, n_;
  std::uint64_t seed_;
  std::vector<std::uint64_t> sign_bits_;
};

inline SjltOperator build_sjlt(Index m, Index n, Index s, SjltVariant variant,
                               std::uint64_t seed) {
  return SjltOperator(m, n, s, variant, seed);
}

struct NormCheck {
  double mean = 0.0;
  double standard_error = 0.0;
  Index trials = 0;
};

// Sample mean and standard error of |Phi x|_2^2 over `trials` operators drawn
// from sub-seeds of `seed`.
inline NormCheck expected_square_norm_check(
    const std::function<std::unique_ptr<SketchOperator>(std::uint64_t)>& make,
    const Vec& x, Index trials, std::uint64_t seed) {
  if (trials < 2) throw InsufficientSamples("expected_square_norm_check: trials >= 2 required");
  double sum = 0.0, sumsq = 0.0;
  for (Index t = 0; t < trials; ++t) {
    auto op = make(substream(seed, static_cast<std::uint64_t>(t)));
    if (x.size() != op->cols())
      throw DimensionMismatch("expected_square_norm_check: x length mismatch");
    const double v = op->apply(x).squaredNorm();
    sum += v;
    sumsq += v * v;
  }
  NormCheck out;
  out.trials = trials;
  out.mean = sum / static_cast<double>(trials);
  const double var =
      std::max(0.0, (sumsq - sum * sum / static_cast<double>(trials)) /
                        static_cast<double>(trials - 1));
  out.standard_error = std::sqrt(var / static_cast<double>(trials));
  return out;
}

struct SjltParams {
  Index m, n, s;
  SjltVariant variant;
};

inline NormCheck expected_square_norm_check(const SjltParams& p, const Vec& x,
                                            Index trials, std::uint64_t seed) {
  return expected_square_norm_check(
      [&p](std::uint64_t s_) {
        return std::unique_ptr<SketchOperator>(
            new SjltOperator(p.m, p.n, p.s, p.variant, s_));
      },
      x, trials, seed);
}

}  // namespace sketchlab
