#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace mabeam {

// Deterministic random stream. std::mt19937_64 output is pinned by the
// standard, but the distribution adapters are not, so the mappings from
// raw draws to floats live here. Identical seeds give identical streams
// on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; one value per call keeps the stream layout simple.
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Eigen::VectorXd gaussian_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = gaussian();
    return v;
  }

  Eigen::VectorXcd gaussian_cvector(int n) {
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) {
      const double re = gaussian();
      const double im = gaussian();
      v(i) = std::complex<double>(re, im);
    }
    return v;
  }

  // Uniform over the disk of given radius.
  Eigen::Vector2d disk_point(double radius) {
    const double ang = uniform(0.0, 2.0 * M_PI);
    const double r = radius * std::sqrt(uniform());
    return {r * std::cos(ang), r * std::sin(ang)};
  }

  // Sub-stream with a seed derived from this stream's seed and a tag.
  // Used to give parallel chunks independent, reproducible streams.
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    // splitmix64 step over seed ^ tag
    std::uint64_t x = seed ^ (tag + 0x9e3779b97f4a7c15ULL);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace mabeam
