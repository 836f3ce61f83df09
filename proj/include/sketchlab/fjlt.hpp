#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "sketchlab/sketch_core.hpp"

namespace sketchlab {

// In-place unnormalized fast Walsh-Hadamard transform; n must be a power of two.
inline void fwht(double* a, Index n) {
  for (Index h = 1; h < n; h <<= 1) {
    for (Index i = 0; i < n; i += h << 1) {
      for (Index k = i; k < i + h; ++k) {
        const double u = a[k];
        const double v = a[k + h];
        a[k] = u + v;
        a[k + h] = u - v;
      }
    }
  }
}

enum class FjltTransform { kWalshHadamardOrthonormal };

// Subsampled orthonormal transform with random sign flips: each of the n rows
// is kept independently with probability m/n and scaled by sqrt(n/m), so the
// realized row count is Binomial(n, m/n). If no row survives, the selectors
// are re-drawn from the next sub-stream and the retry count recorded.
class FjltOperator final : public SketchOperator {
 public:
  FjltOperator(Index n, Index m, std::uint64_t seed,
               FjltTransform transform = FjltTransform::kWalshHadamardOrthonormal)
      : n_(n), target_m_(m), seed_(seed), transform_(transform) {
    if (n <= 0) throw ZeroDimension("fjlt: n must be positive");
    if ((n & (n - 1)) != 0)
      throw BadDimension("fjlt: n must be a power of two, got " + std::to_string(n));
    if (m < 1 || m > n)
      throw MOutOfRange("fjlt: need 1 <= m <= n, got m=" + std::to_string(m));

    const double p = static_cast<double>(m) / static_cast<double>(n);
    std::uint64_t stream = 0;
    for (;;) {
      Rng rng(substream(seed, stream));
      selected_.clear();
      for (Index i = 0; i < n; ++i)
        if (rng.uniform() < p) selected_.push_back(static_cast<std::int32_t>(i));
      if (!selected_.empty()) break;
      ++redraws_;
      stream = static_cast<std::uint64_t>(redraws_);
    }

    Rng sign_rng(substream(seed, 0x5161 /* sign stream id */));
    sign_bits_.assign((static_cast<std::size_t>(n) + 63) / 64, 0);
    for (Index i = 0; i < n; ++i)
      if (sign_rng.sign_bit())
        sign_bits_[static_cast<std::size_t>(i) >> 6] |= std::uint64_t(1) << (i & 63);
  }

  Index rows() const noexcept override { return static_cast<Index>(selected_.size()); }
  Index cols() const noexcept override { return n_; }
  Index target_rows() const noexcept { return target_m_; }
  std::uint64_t seed() const noexcept { return seed_; }
  FjltTransform transform() const noexcept { return transform_; }
  Index redraws() const noexcept { return redraws_; }
  const std::vector<std::int32_t>& selected_rows() const noexcept { return selected_; }

  double sign(Index i) const {
    return (sign_bits_[static_cast<std::size_t>(i) >> 6] >> (i & 63)) & 1 ? -1.0 : 1.0;
  }

 protected:
  void apply_into(const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> y) const override {
    std::vector<double> v(static_cast<std::size_t>(n_));
    for (Index i = 0; i < n_; ++i) v[static_cast<std::size_t>(i)] = sign(i) * x[i];
    fwht(v.data(), n_);
    // orthonormal transform contributes 1/sqrt(n), row scaling sqrt(n/m)
    const double a = 1.0 / std::sqrt(static_cast<double>(target_m_));
    for (Index t = 0; t < rows(); ++t)
      y[t] = a * v[static_cast<std::size_t>(selected_[static_cast<std::size_t>(t)])];
  }

 private:
  Index n_, target_m_;
  std::uint64_t seed_;
  FjltTransform transform_;
  Index redraws_ = 0;
  std::vector<std::int32_t> selected_;
  std::vector<std::uint64_t> sign_bits_;
};

inline FjltOperator build_fjlt(Index n, Index m, std::uint64_t seed,
                               FjltTransform t = FjltTransform::kWalshHadamardOrthonormal) {
  return FjltOperator(n, m, seed, t);
}

}  // namespace sketchlab
