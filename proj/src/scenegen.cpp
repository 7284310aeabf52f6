#include "inpc/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "inpc/appearance.hpp"
#include "inpc/error.hpp"

namespace inpc {
namespace {

struct Box {
  std::array<int, 3> lo, hi;  // inclusive lattice range

  bool on_surface(int x, int y, int z) const {
    const std::array<int, 3> p{x, y, z};
    bool inside = true, boundary = false;
    for (int a = 0; a < 3; ++a) {
      inside = inside && p[a] >= lo[a] && p[a] <= hi[a];
      boundary = boundary || p[a] == lo[a] || p[a] == hi[a];
    }
    return inside && boundary;
  }
};

// Signed distance to a union of spheres.
struct Blobs {
  std::vector<Vec3> centers;
  std::vector<double> radii;

  double distance(const Vec3& p) const {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < centers.size(); ++i) d = std::min(d, norm(p - centers[i]) - radii[i]);
    return d;
  }
};

}  // namespace

SceneKind parse_scene_kind(std::string_view name) {
  if (name == "boxes") return SceneKind::Boxes;
  if (name == "blobs") return SceneKind::Blobs;
  if (name == "shell") return SceneKind::Shell;
  fail("unknown scene kind '" + std::string(name) + "' (expected boxes, blobs or shell)");
}

const char* to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::Boxes:
      return "boxes";
    case SceneKind::Blobs:
      return "blobs";
    case SceneKind::Shell:
      return "shell";
  }
  return "?";
}

std::vector<CameraView> camera_ring(const CameraRig& rig) {
  if (rig.count < 1 || rig.width < 1 || rig.height < 1) fail("camera_ring: need at least one camera and a non-empty image");
  if (!(rig.fov_y_degrees > 0 && rig.fov_y_degrees < 180)) fail("camera_ring: field of view must be in (0, 180) degrees");
  std::vector<CameraView> cams;
  const double f = 0.5 * rig.height / std::tan(0.5 * rig.fov_y_degrees * std::numbers::pi / 180.0);
  for (int k = 0; k < rig.count; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / rig.count;
    CameraView c;
    c.fx = c.fy = f;
    c.cx = 0.5 * (rig.width - 1);
    c.cy = 0.5 * (rig.height - 1);
    c.width = rig.width;
    c.height = rig.height;
    c.z_near = rig.z_near;
    const Vec3 eye{rig.radius * std::sin(theta), rig.elevation, -rig.radius * std::cos(theta)};
    c.world_to_camera = RigidTransform::look_at(eye, Vec3{0, 0, 0}, Vec3{0, 1, 0});
    c.validate();
    cams.push_back(c);
  }
  return cams;
}

ProbabilityField generate_field(SceneKind kind, std::uint64_t seed, int resolution) {
  if (resolution < 4 || resolution > (1 << 18)) fail("generate_field: resolution must be in [4, 2^18]");
  const SceneBounds bounds;
  std::mt19937_64 rng(mix64(seed));
  auto uniform = [&](double a, double b) { return a + (b - a) * to_unit(rng()); };
  const double vs = (bounds.max.x - bounds.min.x) / resolution;
  const int last = resolution - 1;
  std::vector<Voxel> voxels;

  auto jitter = [&](std::uint32_t x, std::uint32_t y, std::uint32_t z) {
    return 0.5 + 0.5 * to_unit(mix64(seed ^ VoxelKey::encode(x, y, z).value));
  };

  if (kind == SceneKind::Boxes) {
    // Open-front room with two boxes standing on the floor.
    auto cell = [&](double c) { return std::clamp(static_cast<int>(std::floor((c - bounds.min.x) / vs)), 0, last); };
    std::vector<Box> boxes;
    const double tall = uniform(0.8, 1.2), low = uniform(0.4, 0.6);
    const double tx = uniform(-0.6, -0.3), tz = uniform(0.0, 0.4);
    const double lx = uniform(0.2, 0.5), lz = uniform(-0.4, 0.0);
    boxes.push_back({{cell(tx - 0.25), 1, cell(tz - 0.25)}, {cell(tx + 0.25), cell(-1.0 + tall), cell(tz + 0.25)}});
    boxes.push_back({{cell(lx - 0.25), 1, cell(lz - 0.25)}, {cell(lx + 0.25), cell(-1.0 + low), cell(lz + 0.25)}});
    for (int z = 0; z < resolution; ++z)
      for (int y = 0; y < resolution; ++y)
        for (int x = 0; x < resolution; ++x) {
          const bool wall = y == 0 || y == last || x == 0 || x == last || z == last;
          const bool box = std::any_of(boxes.begin(), boxes.end(), [&](const Box& b) { return b.on_surface(x, y, z); });
          if (!wall && !box) continue;
          const double w = (box ? 1.0 : 0.6) * jitter(x, y, z);
          voxels.push_back(lattice_voxel(resolution, bounds, x, y, z, w));
        }
  } else {
    Blobs shape;
    if (kind == SceneKind::Shell) {
      shape.centers.push_back({0, 0, 0});
      shape.radii.push_back(uniform(0.65, 0.8));
    } else {
      const int count = 6 + static_cast<int>(rng() % 7);
      for (int i = 0; i < count; ++i) {
        shape.centers.push_back({uniform(-0.55, 0.55), uniform(-0.55, 0.55), uniform(-0.55, 0.55)});
        shape.radii.push_back(uniform(0.15, 0.35));
      }
    }
    const double band = 0.5 * std::sqrt(3.0) * vs;
    for (int z = 0; z < resolution; ++z)
      for (int y = 0; y < resolution; ++y)
        for (int x = 0; x < resolution; ++x) {
          const Voxel v = lattice_voxel(resolution, bounds, x, y, z, 0.0);
          if (std::abs(shape.distance(v.center)) > band) continue;
          voxels.push_back(lattice_voxel(resolution, bounds, x, y, z, jitter(x, y, z)));
        }
  }
  return ProbabilityField(resolution, bounds, std::move(voxels));
}

Scene generate_scene(SceneKind kind, std::uint64_t seed, int resolution, const CameraRig& rig) {
  Scene scene;
  scene.kind = to_string(kind);
  scene.seed = seed;
  scene.oracle_seed = mix64(seed ^ 0x6170706561726e63ull);
  scene.background_seed = mix64(seed ^ 0x6261636b67726f75ull);
  scene.field = generate_field(kind, seed, resolution);
  scene.cameras = camera_ring(rig);
  return scene;
}

}  // namespace inpc
