#include "inpc/directions.hpp"

#include <cmath>
#include <mutex>

namespace inpc {

DirectionKey DirectionKey::of(const CameraView& camera) {
  DirectionKey k{camera.fx, camera.fy, camera.cx, camera.cy, camera.width, camera.height, 0, 0};
  if (camera.distortion) {
    k.k1 = camera.distortion->k1;
    k.k2 = camera.distortion->k2;
  }
  return k;
}

DirectionGrid pixel_ray_directions(const CameraView& camera) {
  camera.validate();
  DirectionGrid grid;
  grid.key = DirectionKey::of(camera);
  grid.width = camera.width;
  grid.height = camera.height;
  grid.directions.resize(camera.pixel_count());
  const bool distorted = grid.key.k1 != 0 || grid.key.k2 != 0;
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const double xd = (x - camera.cx) / camera.fx;
      const double yd = (y - camera.cy) / camera.fy;
      double xn = xd, yn = yd;
      if (distorted) {
        for (int it = 0; it < 50; ++it) {
          const double r2 = xn * xn + yn * yn;
          const double f = 1.0 + grid.key.k1 * r2 + grid.key.k2 * r2 * r2;
          xn = xd / f;
          yn = yd / f;
        }
      }
      grid.directions[static_cast<std::size_t>(y) * camera.width + x] = normalize(Vec3{xn, yn, 1.0});
    }
  }
  return grid;
}

DirectionCache::Lookup DirectionCache::get(const CameraView& camera) {
  const DirectionKey key = DirectionKey::of(camera);
  {
    std::shared_lock lock(mutex_);
    if (auto it = grids_.find(key); it != grids_.end()) return {it->second, true};
  }
  auto grid = std::make_shared<const DirectionGrid>(pixel_ray_directions(camera));
  std::unique_lock lock(mutex_);
  auto [it, inserted] = grids_.emplace(key, std::move(grid));
  if (inserted) ++misses_;
  return {it->second, !inserted};
}

std::size_t DirectionCache::size() const {
  std::shared_lock lock(mutex_);
  return grids_.size();
}

std::size_t DirectionCache::misses() const {
  std::shared_lock lock(mutex_);
  return misses_;
}

std::vector<Vec3> world_ray_directions(const CameraView& camera, const DirectionGrid& grid) {
  const Mat3 cam_to_world = camera.world_to_camera.rotation.transposed();
  std::vector<Vec3> out(grid.directions.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = cam_to_world * grid.directions[i];
  return out;
}

}  // namespace inpc
