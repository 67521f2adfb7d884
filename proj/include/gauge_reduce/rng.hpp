#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>

namespace gauge_reduce {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of path `index` under run seed `seed`. Depends on nothing else, so a
/// path draws the same numbers whichever thread runs it.
inline std::uint64_t path_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = seed;
  const std::uint64_t a = splitmix64(s);
  s = a ^ (index * 0xd1b54a32d192ed03ULL);
  splitmix64(s);
  return splitmix64(s);
}

class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t index) : engine_(path_seed(seed, index)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  /// Fills `out` with independent N(0, stddev^2) entries.
  void fill_normal(Eigen::Ref<Eigen::VectorXd> out, double stddev) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = stddev * normal_(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// Increments of a lattice Wiener process: each component has variance dt / w,
/// w = h^s being the flat-metric weight.
inline Eigen::VectorXd wiener_increment(PathRng& rng, Eigen::Index n, double dt, double weight) {
  Eigen::VectorXd dw(n);
  rng.fill_normal(dw, std::sqrt(dt / weight));
  return dw;
}

}  // namespace gauge_reduce
