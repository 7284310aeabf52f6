#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "inpc/math.hpp"

namespace inpc {

inline constexpr int kShCoeffsPerChannel = 9;
inline constexpr int kFeatureChannels = 4;
inline constexpr int kShBlockSize = kShCoeffsPerChannel * kFeatureChannels;

/// Degree-2 SH coefficients, channel-major: block[c * 9 + lm].
using ShBlock = std::array<double, kShBlockSize>;

/// 64-bit sparse voxel key: level in the top 10 bits, 18-bit Morton-interleaved x/y/z below.
struct VoxelKey {
  std::uint64_t value = 0;

  static VoxelKey encode(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz, std::uint32_t level = 0);
  std::array<std::uint32_t, 3> index() const;
  std::uint32_t level() const { return static_cast<std::uint32_t>(value >> 54); }

  auto operator<=>(const VoxelKey&) const = default;
};

struct Voxel {
  VoxelKey key;
  Vec3 center;
  double size = 0;
  double weight = 0;

  Vec3 origin() const { return center - Vec3{size, size, size} * 0.5; }
};

struct SceneBounds {
  Vec3 min{-1, -1, -1};
  Vec3 max{1, 1, 1};
  bool operator==(const SceneBounds&) const = default;
};

/// Voxel record for integer lattice index (ix, iy, iz) of a grid with `resolution` cells per axis at level 0.
Voxel lattice_voxel(int resolution, const SceneBounds& bounds, std::uint32_t ix, std::uint32_t iy, std::uint32_t iz,
                    double weight, std::uint32_t level = 0);

/// Sparse grid of cubic voxels with per-voxel sampling weights.
class ProbabilityField {
 public:
  ProbabilityField() = default;
  ProbabilityField(int resolution, SceneBounds bounds, std::vector<Voxel> voxels);

  int resolution() const { return resolution_; }
  const SceneBounds& bounds() const { return bounds_; }
  std::span<const Voxel> voxels() const { return voxels_; }
  std::size_t size() const { return voxels_.size(); }
  bool empty() const { return voxels_.empty(); }

  /// Edge length of a voxel at `level` (level 0 = base resolution).
  double voxel_size(std::uint32_t level) const;

  /// Throws if any invariant is violated.
  void validate() const;

  /// Builds a voxel record on the lattice for the given integer index.
  Voxel make_voxel(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz, double weight,
                   std::uint32_t level = 0) const;

 private:
  int resolution_ = 128;
  SceneBounds bounds_;
  std::vector<Voxel> voxels_;
};

/// Explicit point cloud (positions, opacities and SH appearance).
struct PointSet {
  std::vector<Vec3> positions;
  std::vector<double> opacities;
  std::vector<ShBlock> sh;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  void reserve(std::size_t n);
  void append(const PointSet& other);
  void validate() const;
};

struct RadialDistortion {
  double k1 = 0;
  double k2 = 0;
  bool operator==(const RadialDistortion&) const = default;
};

/// Pinhole camera. Pixel (x, y) has its center at continuous coordinate (x, y).
struct CameraView {
  double fx = 1, fy = 1;
  double cx = 0, cy = 0;
  int width = 1, height = 1;
  RigidTransform world_to_camera;
  double z_near = 0.01;
  std::optional<RadialDistortion> distortion;

  void validate() const;
  Vec3 origin() const { return world_to_camera.origin(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }

  /// Applies the radial distortion model (identity without coefficients) to normalized coordinates.
  std::array<double, 2> distort(double xn, double yn) const;
  /// Continuous pixel coordinates of a camera-space point with z > 0.
  std::array<double, 2> project_camera_space(const Vec3& pc) const;
  /// True if the world point lies past the near plane and projects inside the image extents.
  bool in_frustum(const Vec3& world) const;

  bool operator==(const CameraView&) const = default;
};

/// H x W feature image with residual transmittance per pixel.
struct FeatureImage {
  int width = 0, height = 0;
  std::vector<Feature4> features;
  std::vector<double> transmittance;

  FeatureImage() = default;
  FeatureImage(int w, int h);

  std::size_t pixel_count() const { return features.size(); }
  Feature4& at(int x, int y) { return features[static_cast<std::size_t>(y) * width + x]; }
  const Feature4& at(int x, int y) const { return features[static_cast<std::size_t>(y) * width + x]; }
  void validate() const;
};

}  // namespace inpc
