#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace sketchlab {

// Finalizer from the splitmix64 generator. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

// Stream seed for sub-stream `index` of a master seed. Sub-streams are what
// make construction and Monte Carlo loops order-independent: entity i always
// draws from substream(seed, i) no matter which thread handles it.
constexpr std::uint64_t substream(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(seed ^ mix64(index ^ 0x632BE59BD9B4E019ULL));
}

// Counter-based splitmix64 engine. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t r;
    do {
      r = (*this)();
    } while (r >= limit);
    return r % n;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  // Uniform double in (0, 1].
  double uniform_pos() noexcept {
    return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. Two uniforms per draw, no cached spare,
  // so the draw count per call is fixed.
  double gaussian() noexcept {
    const double u = uniform_pos();
    const double v = uniform();
    return std::sqrt(-2.0 * std::log(u)) *
           std::cos(2.0 * 3.14159265358979323846 * v);
  }

  bool sign_bit() noexcept { return ((*this)() >> 63) != 0; }

 private:
  std::uint64_t state_;
};

}  // namespace sketchlab
