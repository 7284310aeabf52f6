#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "inpc/math.hpp"
#include "inpc/scene.hpp"

namespace inpc {

/// SplitMix64 finalizer; used wherever a seed or id needs to be decorrelated.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit word.
constexpr double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

/// Procedural stand-in for a trained appearance field: smooth trigonometric functions of the
/// contracted position, parameterized by a seed.
class AppearanceOracle {
 public:
  explicit AppearanceOracle(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }
  double opacity(const Vec3& contracted) const;
  ShBlock sh(const Vec3& contracted) const;

 private:
  struct Wave {
    Vec3 freq;
    double phase = 0;
    double amplitude = 0;
    double offset = 0;
  };
  std::uint64_t seed_;
  Wave opacity_wave_;
  Wave opacity_warp_;
  std::array<Wave, kShBlockSize> sh_waves_;
};

struct AppearanceBatch {
  std::vector<double> opacities;
  std::vector<ShBlock> sh;
};

/// Throws if any position lies outside the contraction ball (norm > 2 + 1e-6).
AppearanceBatch query_appearance(const AppearanceOracle& oracle, std::span<const Vec3> contracted);

/// Band-limited (degree-2 SH) background radiance stand-in with outputs in (0, 1).
class BackgroundOracle {
 public:
  explicit BackgroundOracle(std::uint64_t seed = 0);
  /// Constant background (all channels equal `value`).
  static BackgroundOracle constant(double value);

  Feature4 operator()(const Vec3& dir) const;
  const ShBlock& coefficients() const { return coeffs_; }

 private:
  ShBlock coeffs_{};
};

}  // namespace inpc
