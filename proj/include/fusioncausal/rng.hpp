#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace fusioncausal {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// mt19937_64 output is fixed by the standard; the transforms below are ours,
// so draws are identical on every conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Independent stream for (seed, stream id); one stream per replication and variable.
  static Rng stream(std::uint64_t seed, std::uint64_t id) {
    return Rng(splitmix64(splitmix64(seed) ^ splitmix64(id * 0xD1B54A32D192ED03ULL + 1)));
  }

  std::uint64_t next() { return eng_(); }
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform_open() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }
  double normal() {
    double u1 = uniform_open(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t below(std::size_t k) { return static_cast<std::size_t>(uniform() * static_cast<double>(k)); }

  template <class It>
  void shuffle(It first, It last) {
    auto n = last - first;
    for (auto i = n - 1; i > 0; --i) {
      auto j = static_cast<decltype(i)>(below(static_cast<std::size_t>(i + 1)));
      std::swap(first[i], first[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

inline double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace fusioncausal
