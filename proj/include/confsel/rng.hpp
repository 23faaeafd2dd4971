#ifndef CONFSEL_RNG_HPP
#define CONFSEL_RNG_HPP

#include <cstdint>
#include <vector>

namespace confsel {

// splitmix64. The standard <random> engines are portable but the
// distributions are not; every sampled value in this project must be
// bit-identical across platforms, so we roll the few samplers we need.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1), 53-bit resolution
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // uniform in {0, ..., bound-1}
  uint64_t next_below(uint64_t bound) {
    // multiply-shift; bias is negligible for desk-scale bounds
    return static_cast<uint64_t>(next_double() * static_cast<double>(bound));
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // index sampled from unnormalized nonnegative weights
  size_t next_categorical(const std::vector<double>& weights) {
    double total = 0;
    for (double w : weights) total += w;
    double u = next_double() * total;
    double acc = 0;
    for (size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.size() - 1;
  }

 private:
  uint64_t state_;
};

}  // namespace confsel

#endif  // CONFSEL_RNG_HPP
