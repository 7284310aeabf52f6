#include "inpc/scene.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "inpc/error.hpp"

namespace inpc {
namespace {

constexpr std::uint32_t kMortonBits = 18;

std::uint64_t spread_bits(std::uint32_t v) {
  std::uint64_t x = v & ((1u << kMortonBits) - 1);
  std::uint64_t out = 0;
  for (std::uint32_t b = 0; b < kMortonBits; ++b) out |= ((x >> b) & 1ull) << (3 * b);
  return out;
}

std::uint32_t compact_bits(std::uint64_t v) {
  std::uint32_t out = 0;
  for (std::uint32_t b = 0; b < kMortonBits; ++b) out |= static_cast<std::uint32_t>((v >> (3 * b)) & 1ull) << b;
  return out;
}

}  // namespace

VoxelKey VoxelKey::encode(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz, std::uint32_t level) {
  if (ix >= (1u << kMortonBits) || iy >= (1u << kMortonBits) || iz >= (1u << kMortonBits) || level >= 1024)
    fail("voxel index out of key range");
  return {spread_bits(ix) | (spread_bits(iy) << 1) | (spread_bits(iz) << 2) |
          (static_cast<std::uint64_t>(level) << 54)};
}

std::array<std::uint32_t, 3> VoxelKey::index() const {
  const std::uint64_t morton = value & ((1ull << 54) - 1);
  return {compact_bits(morton), compact_bits(morton >> 1), compact_bits(morton >> 2)};
}

ProbabilityField::ProbabilityField(int resolution, SceneBounds bounds, std::vector<Voxel> voxels)
    : resolution_(resolution), bounds_(bounds), voxels_(std::move(voxels)) {
  validate();
}

double ProbabilityField::voxel_size(std::uint32_t level) const {
  return (bounds_.max.x - bounds_.min.x) / (static_cast<double>(resolution_) * std::ldexp(1.0, static_cast<int>(level)));
}

Voxel lattice_voxel(int resolution, const SceneBounds& bounds, std::uint32_t ix, std::uint32_t iy, std::uint32_t iz,
                    double weight, std::uint32_t level) {
  Voxel v;
  v.key = VoxelKey::encode(ix, iy, iz, level);
  v.size = (bounds.max.x - bounds.min.x) / (static_cast<double>(resolution) * std::ldexp(1.0, static_cast<int>(level)));
  v.center = bounds.min + Vec3{(ix + 0.5) * v.size, (iy + 0.5) * v.size, (iz + 0.5) * v.size};
  v.weight = weight;
  return v;
}

Voxel ProbabilityField::make_voxel(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz, double weight,
                                   std::uint32_t level) const {
  return lattice_voxel(resolution_, bounds_, ix, iy, iz, weight, level);
}

void ProbabilityField::validate() const {
  if (resolution_ < 1) fail("field resolution must be >= 1");
  const Vec3 extent = bounds_.max - bounds_.min;
  if (!(extent.x > 0) || std::abs(extent.x - extent.y) > 1e-12 * extent.x || std::abs(extent.x - extent.z) > 1e-12 * extent.x)
    fail("field bounds must be a non-degenerate cube");
  if (voxels_.empty()) fail("probability field has no voxels");
  bool any_positive = false;
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(voxels_.size());
  for (const Voxel& v : voxels_) {
    if (!(v.weight >= 0) || !std::isfinite(v.weight)) fail("voxel weight must be finite and >= 0");
    any_positive |= v.weight > 0;
    if (!seen.insert(v.key.value).second) fail("duplicate voxel index");
    const double expected = voxel_size(v.key.level());
    if (!(v.size > 0) || std::abs(v.size - expected) > 1e-12 * expected) fail("voxel size inconsistent with its level");
    const auto idx = v.key.index();
    for (int a = 0; a < 3; ++a) {
      const double c = bounds_.min[a] + (idx[a] + 0.5) * expected;
      if (std::abs(c - v.center[a]) > 1e-9 * extent.x) fail("voxel center off lattice");
    }
  }
  if (!any_positive) fail("probability field needs at least one positive weight");
}

void PointSet::reserve(std::size_t n) {
  positions.reserve(n);
  opacities.reserve(n);
  sh.reserve(n);
}

void PointSet::append(const PointSet& other) {
  positions.insert(positions.end(), other.positions.begin(), other.positions.end());
  opacities.insert(opacities.end(), other.opacities.begin(), other.opacities.end());
  sh.insert(sh.end(), other.sh.begin(), other.sh.end());
}

void PointSet::validate() const {
  if (opacities.size() != positions.size() || sh.size() != positions.size()) fail("point set arrays differ in length");
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (!is_finite(positions[i])) fail("non-finite point position at index " + std::to_string(i));
    if (!(opacities[i] >= 0 && opacities[i] <= 1)) fail("opacity outside [0,1] at index " + std::to_string(i));
  }
}

void CameraView::validate() const {
  if (!(fx > 0) || !(fy > 0)) fail("camera focal lengths must be positive");
  if (!(z_near > 0)) fail("camera near plane must be positive");
  if (width < 1 || height < 1) fail("camera resolution must be at least 1x1");
}

std::array<double, 2> CameraView::distort(double xn, double yn) const {
  if (!distortion) return {xn, yn};
  const double r2 = xn * xn + yn * yn;
  const double f = 1.0 + distortion->k1 * r2 + distortion->k2 * r2 * r2;
  return {xn * f, yn * f};
}

std::array<double, 2> CameraView::project_camera_space(const Vec3& pc) const {
  const auto [xd, yd] = distort(pc.x / pc.z, pc.y / pc.z);
  return {fx * xd + cx, fy * yd + cy};
}

bool CameraView::in_frustum(const Vec3& world) const {
  const Vec3 pc = world_to_camera.apply(world);
  if (!(pc.z > z_near)) return false;
  const auto [u, v] = project_camera_space(pc);
  return u >= -0.5 && u < width - 0.5 && v >= -0.5 && v < height - 0.5;
}

FeatureImage::FeatureImage(int w, int h)
    : width(w), height(h), features(static_cast<std::size_t>(w) * h, Feature4{}), transmittance(static_cast<std::size_t>(w) * h, 1.0) {}

void FeatureImage::validate() const {
  if (features.size() != static_cast<std::size_t>(width) * height || transmittance.size() != features.size())
    fail("feature image buffers do not match its dimensions");
  for (std::size_t i = 0; i < features.size(); ++i) {
    for (double v : features[i])
      if (!std::isfinite(v)) fail("non-finite feature value");
    if (!(transmittance[i] >= 0 && transmittance[i] <= 1)) fail("transmittance outside [0,1]");
  }
}

}  // namespace inpc
