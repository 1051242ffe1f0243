#pragma once

#include <cstdint>
#include <random>

namespace vicscan {

/// splitmix64 step; used to derive independent sub-seeds from a master seed
/// so that e.g. every survey node gets its own reproducible noise stream.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic Gaussian stream (mt19937_64 + std::normal_distribution).
class GaussianNoise {
 public:
  explicit GaussianNoise(std::uint64_t seed, double sigma = 1.0)
      : gen_(seed), dist_(0.0, 1.0), sigma_(sigma) {}

  double operator()() { return sigma_ == 0.0 ? 0.0 : sigma_ * dist_(gen_); }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> dist_;
  double sigma_;
};

}  // namespace vicscan
