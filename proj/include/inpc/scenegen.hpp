#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "inpc/io.hpp"
#include "inpc/scene.hpp"

namespace inpc {

enum class SceneKind { Boxes, Blobs, Shell };

SceneKind parse_scene_kind(std::string_view name);
const char* to_string(SceneKind kind);

struct CameraRig {
  int count = 24;
  int width = 256;
  int height = 192;
  double fov_y_degrees = 50.0;
  double radius = 3.0;
  double elevation = 0.8;
  double z_near = 0.05;
};

/// Cameras on a horizontal circle around the origin, all looking at the origin (+y up).
std::vector<CameraView> camera_ring(const CameraRig& rig);

/// Voxels near the surfaces of a procedural shape, on a `resolution`^3 lattice over [-1, 1]^3.
ProbabilityField generate_field(SceneKind kind, std::uint64_t seed, int resolution = 128);

Scene generate_scene(SceneKind kind, std::uint64_t seed, int resolution = 128, const CameraRig& rig = {});

}  // namespace inpc
