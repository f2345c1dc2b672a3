#ifndef CWC_RNG_HPP
#define CWC_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace cwc {

/// Seeded random stream. Uses std::mt19937_64, whose output sequence is fixed
/// by the standard, and converts bits to doubles by hand so draws do not
/// depend on the standard library's distribution implementations.
class Rng {
public:
  static constexpr std::string_view kAlgorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return draws_; }

  std::uint64_t next() {
    ++draws_;
    return engine_();
  }

  /// Uniform on the open interval (0, 1).
  double open01() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Exponential with the given rate; always strictly positive.
  double exponential(double rate) { return -std::log(open01()) / rate; }

private:
  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of replica `index` in an ensemble started from `master`.
inline std::uint64_t replica_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master ^ mix64(index));
}

} // namespace cwc

#endif // CWC_RNG_HPP
