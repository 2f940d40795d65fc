#pragma once

#include <cstdint>
#include <cmath>

namespace twistlab {

// Stateless counter-based generator. Every draw is a pure function of
// (seed, stream, counter), so concurrent work units with disjoint streams
// produce values independent of scheduling order.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  CounterRng stream(std::uint64_t s) const { return CounterRng(seed_, s); }

  // uniform in [0, 1)
  double uniform(std::uint64_t counter) const {
    return double(word(counter, 0) >> 11) * 0x1.0p-53;
  }

  double uniform(std::uint64_t counter, double lo, double hi) const {
    return lo + (hi - lo) * uniform(counter);
  }

  // standard normal via Box-Muller on two lanes of the same counter
  double gaussian(std::uint64_t counter) const {
    double u1 = double((word(counter, 1) >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    double u2 = double(word(counter, 2) >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

private:
  std::uint64_t seed_, stream_;

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t word(std::uint64_t counter, std::uint64_t lane) const {
    std::uint64_t h = mix(seed_);
    h = mix(h ^ (stream_ * 0xd1342543de82ef95ull + 0x2545f4914f6cdd1dull));
    h = mix(h ^ counter);
    return mix(h ^ (lane * 0x9e3779b97f4a7c15ull));
  }
};

}  // namespace twistlab
