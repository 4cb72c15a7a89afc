#ifndef ONCOPROG_RNG_HPP
#define ONCOPROG_RNG_HPP

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace oncoprog {

// Distribution objects in <random> are implementation-defined, so draws are
// derived from the raw mt19937_64 stream to keep outputs identical across
// standard libraries.
class rng {
public:
  explicit rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  auto
  uniform() -> double {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  auto
  uniform(double lo, double hi) -> double {
    return lo + (hi - lo) * uniform();
  }

  // Uniform integer on [0, n), rejection sampled.
  auto
  below(std::uint64_t n) -> std::uint64_t {
    if (n <= 1)
      return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r = engine_();
    while (r >= limit)
      r = engine_();
    return r % n;
  }

  auto
  bernoulli(double p) -> bool {
    return uniform() < p;
  }

  template <typename T>
  void
  shuffle(std::span<T> xs) {
    for (std::size_t i = xs.size(); i > 1; --i)
      std::swap(xs[i - 1], xs[below(i)]);
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace oncoprog

#endif  // ONCOPROG_RNG_HPP
