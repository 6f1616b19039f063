#ifndef POLYFIT_RNG_HPP
#define POLYFIT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include "polyfit/common.hpp"

namespace polyfit {

/// splitmix64 step; used to derive independent substream seeds from one
/// root seed so that every consumer of randomness is pinned by --seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seeded generator with explicit uniform/normal draws. The bit stream of
/// mt19937_64 is standard-specified, and the mappings below are our own,
/// so identical seeds give identical draws everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() {
    // 53-bit mantissa draw in [0,1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Box-Muller; one value per call, cached pair for the next call.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  VectorXd normal_vec(int n) {
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  /// Nonzero gaussian direction; resamples the rare near-zero draw.
  VectorXd direction(int n, double dir_eps = 1e-12) {
    VectorXd v = normal_vec(n);
    while (v.norm() <= dir_eps) v = normal_vec(n);
    return v;
  }

  VectorXd unit_vec(int n) {
    VectorXd v = direction(n);
    return v / v.norm();
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace polyfit

#endif  // POLYFIT_RNG_HPP
