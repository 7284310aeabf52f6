#include "inpc/gaussian.hpp"

#include <algorithm>
#include <cmath>

#include "inpc/error.hpp"

namespace inpc {

double ProjectedGaussian::max_eigenvalue() const {
  const double mid = 0.5 * (cov[0] + cov[2]);
  const double half_diff = 0.5 * (cov[0] - cov[2]);
  return mid + std::sqrt(half_diff * half_diff + cov[1] * cov[1]);
}

double gaussian_world_scale(const CameraView& camera, double near_plane_std_px) {
  camera.validate();
  return near_plane_std_px * camera.z_near / std::max(camera.fx, camera.fy);
}

std::array<double, 3> projected_covariance(const Vec3& pc, double world_scale, const CameraView& camera) {
  const double inv_z = 1.0 / pc.z;
  const double j00 = camera.fx * inv_z, j02 = -camera.fx * pc.x * inv_z * inv_z;
  const double j11 = camera.fy * inv_z, j12 = -camera.fy * pc.y * inv_z * inv_z;
  const double s2 = world_scale * world_scale;
  // J J^T for J = [[j00, 0, j02], [0, j11, j12]]; the rotation cancels for isotropic covariance.
  return {s2 * (j00 * j00 + j02 * j02), s2 * (j02 * j12), s2 * (j11 * j11 + j12 * j12)};
}

ProjectedGaussian project_gaussian(const Vec3& world_position, double world_scale, const CameraView& camera,
                                   double dilation, std::uint32_t point) {
  const Vec3 pc = camera.world_to_camera.apply(world_position);
  if (!(pc.z >= camera.z_near)) fail("project_gaussian: point in front of the near plane");
  ProjectedGaussian g;
  g.point = point;
  g.depth = pc.z;
  g.mean = camera.project_camera_space(pc);
  g.cov = projected_covariance(pc, world_scale, camera);
  g.cov[0] += dilation;
  g.cov[2] += dilation;
  const double det = g.cov[0] * g.cov[2] - g.cov[1] * g.cov[1];
  if (!(g.cov[0] > 0) || !(det > 0) || !std::isfinite(det)) fail_numeric("project_gaussian: covariance is not positive definite");
  g.radius = 3.0 * std::sqrt(g.max_eigenvalue());
  return g;
}

Splat gaussian_splat(const ProjectedGaussian& g, int width, int height) {
  Splat s;
  s.point = g.point;
  s.depth = g.depth;
  s.u = g.mean[0];
  s.v = g.mean[1];
  const double det = g.cov[0] * g.cov[2] - g.cov[1] * g.cov[1];
  s.inv_a = g.cov[2] / det;
  s.inv_b = -g.cov[1] / det;
  s.inv_c = g.cov[0] / det;
  s.radius = g.radius;
  if (s.u + s.radius < 0 || s.u - s.radius > width - 1 || s.v + s.radius < 0 || s.v - s.radius > height - 1) return s;
  s.x0 = std::max(0, static_cast<int>(std::ceil(s.u - s.radius)));
  s.x1 = std::min(width - 1, static_cast<int>(std::floor(s.u + s.radius)));
  s.y0 = std::max(0, static_cast<int>(std::ceil(s.v - s.radius)));
  s.y1 = std::min(height - 1, static_cast<int>(std::floor(s.v + s.radius)));
  return s;
}

SplatList make_gaussian_splats(const PointSet& points, const ProjectedPoints& projected, const CameraView& camera,
                               const GaussianOptions& options) {
  const double scale = gaussian_world_scale(camera, options.near_plane_std_px);
  SplatList list{SplatMode::Gaussian, camera.width, camera.height, {}};
  list.splats.reserve(projected.size());
  for (std::size_t i = 0; i < projected.size(); ++i) {
    const std::uint32_t idx = projected.index[i];
    list.splats.push_back(gaussian_splat(project_gaussian(points.positions[idx], scale, camera, options.dilation, idx),
                                         camera.width, camera.height));
  }
  return list;
}

std::vector<Fragment> gen_fragments_gaussian(const std::vector<ProjectedGaussian>& gaussians, int width, int height) {
  SplatList list{SplatMode::Gaussian, width, height, {}};
  list.splats.reserve(gaussians.size());
  for (const auto& g : gaussians) list.splats.push_back(gaussian_splat(g, width, height));
  return gen_fragments(list);
}

}  // namespace inpc
