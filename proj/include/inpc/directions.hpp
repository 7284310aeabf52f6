#pragma once

#include <map>
#include <memory>
#include <shared_mutex>
#include <tuple>
#include <vector>

#include "inpc/math.hpp"
#include "inpc/scene.hpp"

namespace inpc {

/// Intrinsics that fully determine the per-pixel ray directions.
struct DirectionKey {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;
  double k1 = 0, k2 = 0;

  static DirectionKey of(const CameraView& camera);
  auto operator<=>(const DirectionKey&) const = default;
};

/// Unit camera-frame ray direction through every pixel center.
struct DirectionGrid {
  DirectionKey key;
  int width = 0, height = 0;
  std::vector<Vec3> directions;

  const Vec3& at(int x, int y) const { return directions[static_cast<std::size_t>(y) * width + x]; }
};

/// Computes the grid without caching. Distortion is removed by fixed-point iteration.
DirectionGrid pixel_ray_directions(const CameraView& camera);

/// Thread-safe cache of direction grids keyed by intrinsics.
class DirectionCache {
 public:
  struct Lookup {
    std::shared_ptr<const DirectionGrid> grid;
    bool hit = false;
  };

  Lookup get(const CameraView& camera);
  std::size_t size() const;
  std::size_t misses() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<DirectionKey, std::shared_ptr<const DirectionGrid>> grids_;
  std::size_t misses_ = 0;
};

/// World-space ray direction for each pixel (camera frame rotated into the world).
std::vector<Vec3> world_ray_directions(const CameraView& camera, const DirectionGrid& grid);

}  // namespace inpc
