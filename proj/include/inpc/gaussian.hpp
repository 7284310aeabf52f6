#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "inpc/raster.hpp"

namespace inpc {

/// Screen-space isotropic-point Gaussian.
struct ProjectedGaussian {
  std::array<double, 2> mean{};
  /// Symmetric covariance (xx, xy, yy) in pixels^2, dilation included.
  std::array<double, 3> cov{};
  double radius = 0;
  double depth = 0;
  std::uint32_t point = 0;

  double max_eigenvalue() const;
};

/// World-space standard deviation giving `near_plane_std_px` pixels at the near plane, image center.
double gaussian_world_scale(const CameraView& camera, double near_plane_std_px = 5.0);

/// Pre-dilation screen covariance s^2 J J^T of an isotropic Gaussian at camera-space position `pc`.
std::array<double, 3> projected_covariance(const Vec3& pc, double world_scale, const CameraView& camera);

/// Affine (EWA) projection of an isotropic Gaussian, dilated and truncated at 3 sigma.
/// Requires camera-space depth >= z_near.
ProjectedGaussian project_gaussian(const Vec3& world_position, double world_scale, const CameraView& camera,
                                   double dilation = 0.16, std::uint32_t point = 0);

/// Footprint splat from a projected Gaussian, bounding box clipped to the image.
Splat gaussian_splat(const ProjectedGaussian& g, int width, int height);

SplatList make_gaussian_splats(const PointSet& points, const ProjectedPoints& projected, const CameraView& camera,
                               const GaussianOptions& options);

/// Fragments for every pixel center within the truncation radius; w = exp(-d^T S^-1 d / 2).
std::vector<Fragment> gen_fragments_gaussian(const std::vector<ProjectedGaussian>& gaussians, int width, int height);

}  // namespace inpc
