#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace adafnn {

// Counter-based pseudo random generator built on the splitmix64 mixing
// function. The i-th draw is a pure function of (seed, i), which makes
// streams reproducible across platforms and standard library versions;
// std::mt19937 with std::normal_distribution would not give that guarantee
// because distribution implementations differ between vendors.
//
// Substreams are derived by hashing a tag into the seed. This lets one
// experiment seed fan out into independent streams for data generation,
// parameter initialization and batch shuffling without coordinating
// counter ranges.
class Rng {
 public:
  // Reported in experiment metadata so dumps can be reproduced later.
  static constexpr std::string_view kAlgorithm = "splitmix64";

  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() {
    counter_ += kGamma;
    return mix(seed_ + counter_);
  }

  // Uniform on [0, 1) with 53 bits of resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Standard normal via Box-Muller. Exactly two uniforms are consumed per
  // call regardless of the values drawn, so the stream position stays
  // predictable.
  double normal() {
    double u1 = 1.0 - next_double();  // in (0, 1], keeps the log finite
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Integer in [0, n). Uses the multiply-shift reduction; the bias for any
  // realistic n is far below 2^-32 and the mapping is fixed for good.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent substream identified by a tag. Derivation depends only on
  // the parent seed, not on how many draws the parent has made.
  Rng derive(std::string_view tag) const {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a offset basis
    for (char c : tag) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    return Rng(mix(seed_ ^ h));
  }

  Rng derive(std::uint64_t index) const {
    return Rng(mix(seed_ ^ mix(index + kGamma)));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
  static constexpr double kPi = 3.14159265358979323846;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace adafnn
