#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "inpc/math.hpp"

namespace inpc {

/// Equirectangular 4-channel map, W = 2H. Texel (row, col) is centered at (col + 0.5, row + 0.5);
/// u = (atan2(dx, dz) / 2pi + 0.5) W and v = acos(dy) / pi H, so +y is up.
class EnvironmentMap {
 public:
  EnvironmentMap() = default;
  EnvironmentMap(int height, int width, Feature4 fill = {});

  int height() const { return height_; }
  int width() const { return width_; }
  std::vector<Feature4>& texels() { return texels_; }
  const std::vector<Feature4>& texels() const { return texels_; }
  Feature4& at(int row, int col) { return texels_[static_cast<std::size_t>(row) * width_ + col]; }
  const Feature4& at(int row, int col) const { return texels_[static_cast<std::size_t>(row) * width_ + col]; }

  void validate() const;

 private:
  int height_ = 0, width_ = 0;
  std::vector<Feature4> texels_;
};

/// The four texels touched by a bilinear lookup and their weights (the lookup's texel gradient).
struct EnvTaps {
  std::array<std::size_t, 4> texel{};
  std::array<double, 4> weight{};
  // Fractional offsets behind the weights: (1-fx)(1-fy), fx(1-fy), (1-fx)fy, fx fy.
  double fx = 0, fy = 0;
};

EnvTaps env_taps(const EnvironmentMap& map, const Vec3& dir);
Feature4 sample_env(const EnvironmentMap& map, const Vec3& dir);
/// Bilinear blend of the tapped texels; exact when all four texels are equal.
Feature4 interpolate_taps(const EnvTaps& taps, std::span<const Feature4> texels);

/// Direction at the center of texel (row, col).
Vec3 env_texel_direction(const EnvironmentMap& map, int row, int col);

/// Uniform random unit direction from two uniforms in [0, 1).
Vec3 sphere_direction(double u1, double u2);

enum class EnvOptimizer { Sgd, Adam };

struct DistillConfig {
  int height = 256;
  int width = 512;
  int iterations = 1000;
  std::uint64_t batch = 1ull << 16;
  double lr_start = 0.01;
  double lr_end = 0.001;
  std::uint64_t seed = 0;
  EnvOptimizer optimizer = EnvOptimizer::Adam;
  /// Directions used for the initial spherical-mean estimate.
  std::uint64_t mean_samples = 1ull << 14;
  unsigned threads = 1;

  /// 1024 x 2048 map, 1000 iterations, 2^21 directions per iteration.
  static DistillConfig full_scale();
  void validate() const;
  double learning_rate(int iteration) const;
};

using DirectionalOracle = std::function<Feature4(const Vec3&)>;

struct DistillResult {
  EnvironmentMap map;
  /// Batch mean squared error before each update.
  std::vector<double> loss;
};

/// Fits a map to the oracle by minimizing the mean squared lookup error over random directions.
DistillResult distill_env(const DirectionalOracle& oracle, const DistillConfig& config);

/// Mean squared error (all channels) between the map and the oracle on `count` random directions.
double env_mse(const EnvironmentMap& map, const DirectionalOracle& oracle, std::uint64_t count, std::uint64_t seed);

/// PSNR with peak value 1.
double psnr_from_mse(double mse);

}  // namespace inpc
