#pragma once

#include <array>

#include "inpc/math.hpp"
#include "inpc/scene.hpp"

namespace inpc {

// Real spherical-harmonics normalization constants.
inline constexpr double kShC0 = 0.28209479177387814;
inline constexpr double kShC1 = 0.4886025119029199;
inline constexpr double kShC2a = 1.0925484305920792;
inline constexpr double kShC2b = 0.31539156525252005;
inline constexpr double kShC2c = 0.5462742152960396;

/// Degree <= 2 real SH basis at a unit direction, ordered (0,0), (1,-1), (1,0), (1,1), (2,-2) .. (2,2).
constexpr std::array<double, kShCoeffsPerChannel> sh_basis(const Vec3& d) {
  return {kShC0,
          kShC1 * d.y,
          kShC1 * d.z,
          kShC1 * d.x,
          kShC2a * d.x * d.y,
          kShC2a * d.y * d.z,
          kShC2b * (3.0 * d.z * d.z - 1.0),
          kShC2a * d.x * d.z,
          kShC2c * (d.x * d.x - d.y * d.y)};
}

/// Evaluates a 4-channel degree-2 SH block. Non-unit directions are normalized; NaN coefficients throw.
Feature4 eval_sh_degree2(const ShBlock& coeffs, const Vec3& dir);

}  // namespace inpc
