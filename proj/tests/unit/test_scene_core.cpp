#include <cmath>
#include <filesystem>
#include <random>

#include <unistd.h>

#include "doctest.h"
#include "inpc/appearance.hpp"
#include "inpc/directions.hpp"
#include "inpc/error.hpp"
#include "inpc/io.hpp"
#include "inpc/scenegen.hpp"
#include "inpc/sh.hpp"

using namespace inpc;

namespace {

CameraView centered_camera(int w, int h, double f) {
  CameraView c;
  c.fx = c.fy = f;
  c.cx = (w - 1) / 2.0;
  c.cy = (h - 1) / 2.0;
  c.width = w;
  c.height = h;
  c.z_near = 0.1;
  return c;
}

ShBlock random_block(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  ShBlock b;
  for (double& v : b) v = u(rng);
  return b;
}

}  // namespace

TEST_CASE("sh: dc term gives the Y00 constant") {
  ShBlock c{};
  for (int ch = 0; ch < 4; ++ch) c[ch * kShCoeffsPerChannel] = 1.0;
  for (const Vec3 d : {Vec3{0, 0, 1}, Vec3{1, 0, 0}, normalize(Vec3{0.3, -0.7, 0.2})}) {
    const Feature4 f = eval_sh_degree2(c, d);
    for (double v : f) CHECK(v == doctest::Approx(0.2820947918).epsilon(1e-10));
  }
}

TEST_CASE("sh: zero coefficients give zero") {
  const Feature4 f = eval_sh_degree2(ShBlock{}, {0, 0, 1});
  for (double v : f) CHECK(v == 0.0);
}

TEST_CASE("sh: Y10 is odd") {
  ShBlock c{};
  for (int ch = 0; ch < 4; ++ch) c[ch * kShCoeffsPerChannel + 2] = 1.0;
  const Feature4 up = eval_sh_degree2(c, {0, 0, 1});
  const Feature4 down = eval_sh_degree2(c, {0, 0, -1});
  for (int ch = 0; ch < 4; ++ch) {
    CHECK(up[ch] != 0.0);
    CHECK(up[ch] == -down[ch]);
  }
}

TEST_CASE("sh: linear in coefficients") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 100; ++t) {
    const ShBlock c1 = random_block(rng), c2 = random_block(rng);
    const double a = 1.7, b = -0.4;
    ShBlock mix;
    for (int k = 0; k < kShBlockSize; ++k) mix[k] = a * c1[k] + b * c2[k];
    const Vec3 d = normalize(Vec3{0.2 + t * 0.01, -0.5, 0.8});
    const Feature4 lhs = eval_sh_degree2(mix, d);
    const Feature4 f1 = eval_sh_degree2(c1, d), f2 = eval_sh_degree2(c2, d);
    for (int ch = 0; ch < 4; ++ch) CHECK(std::abs(lhs[ch] - (a * f1[ch] + b * f2[ch])) < 1e-12);
  }
}

TEST_CASE("sh: non-unit direction is normalized, NaN rejected") {
  ShBlock c{};
  c[2] = 1.0;
  CHECK(eval_sh_degree2(c, {0, 0, 3})[0] == doctest::Approx(eval_sh_degree2(c, {0, 0, 1})[0]));
  c[5] = std::nan("");
  CHECK_THROWS_AS(eval_sh_degree2(c, {0, 0, 1}), Error);
}

TEST_CASE("directions: principal ray and pinhole back-projection") {
  const CameraView cam = centered_camera(1921, 1081, 1000);
  const DirectionGrid g = pixel_ray_directions(cam);
  const Vec3 center = g.at(960, 540);
  CHECK(center.x == doctest::Approx(0).epsilon(1e-15));
  CHECK(center.y == doctest::Approx(0).epsilon(1e-15));
  CHECK(center.z == doctest::Approx(1));

  const Vec3 off = g.at(1060, 540);
  const Vec3 expect = normalize(Vec3{0.1, 0, 1});
  CHECK(std::abs(off.x - expect.x) < 1e-12);
  CHECK(std::abs(off.y - expect.y) < 1e-12);
  CHECK(std::abs(off.z - expect.z) < 1e-12);

  for (const Vec3& d : g.directions) REQUIRE(std::abs(norm(d) - 1.0) < 1e-9);
}

TEST_CASE("directions: distortion corrected rays stay unit length") {
  CameraView cam = centered_camera(64, 48, 50);
  cam.distortion = RadialDistortion{-0.2, 0.05};
  const DirectionGrid g = pixel_ray_directions(cam);
  for (int y = 0; y < cam.height; y += 7) {
    for (int x = 0; x < cam.width; x += 5) {
      const Vec3 d = g.at(x, y);
      CHECK(std::abs(norm(d) - 1.0) < 1e-9);
      const auto px = cam.project_camera_space(d);
      CHECK(px[0] == doctest::Approx(x).epsilon(1e-9));
      CHECK(px[1] == doctest::Approx(y).epsilon(1e-9));
    }
  }
}

TEST_CASE("directions: cache hit returns the identical grid") {
  DirectionCache cache;
  CameraView cam = centered_camera(32, 24, 40);
  const auto first = cache.get(cam);
  CHECK_FALSE(first.hit);
  const auto second = cache.get(cam);
  CHECK(second.hit);
  CHECK(second.grid == first.grid);
  CHECK(cache.misses() == 1);

  // Pose is not part of the key.
  cam.world_to_camera = RigidTransform::look_at({1, 2, 3}, {0, 0, 0}, {0, 1, 0});
  const auto moved = cache.get(cam);
  CHECK(moved.hit);
  CHECK(moved.grid->directions == pixel_ray_directions(centered_camera(32, 24, 40)).directions);

  cam.fx = 41;
  CHECK_FALSE(cache.get(cam).hit);
  CHECK(cache.size() == 2);
}

TEST_CASE("appearance: deterministic and batch invariant") {
  const AppearanceOracle oracle(42);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.1, 1.1);
  std::vector<Vec3> pos(64);
  for (auto& p : pos) p = {u(rng), u(rng), u(rng)};
  const auto batch = query_appearance(oracle, pos);
  const auto again = query_appearance(AppearanceOracle(42), pos);
  CHECK(batch.opacities == again.opacities);
  CHECK(batch.sh == again.sh);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const auto single = query_appearance(oracle, std::span<const Vec3>(&pos[i], 1));
    CHECK(single.opacities[0] == batch.opacities[i]);
    CHECK(single.sh[0] == batch.sh[i]);
  }
}

TEST_CASE("appearance: opacity histogram spans (0,1)") {
  const AppearanceOracle oracle(1);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2, 2);
  double lo = 1, hi = 0;
  int n = 0;
  while (n < 100000) {
    const Vec3 p{u(rng), u(rng), u(rng)};
    if (norm(p) > 2) continue;
    ++n;
    const double o = oracle.opacity(p);
    REQUIRE(o >= 0);
    REQUIRE(o <= 1);
    lo = std::min(lo, o);
    hi = std::max(hi, o);
  }
  CHECK(lo < 0.1);
  CHECK(hi > 0.9);
}

TEST_CASE("appearance: positions outside the ball are rejected") {
  const AppearanceOracle oracle(1);
  const std::vector<Vec3> bad{{2.1, 0, 0}};
  CHECK_THROWS_AS(query_appearance(oracle, bad), Error);
}

TEST_CASE("voxel keys round trip") {
  const VoxelKey k = VoxelKey::encode(127, 3, 64, 2);
  CHECK(k.index() == std::array<std::uint32_t, 3>{127, 3, 64});
  CHECK(k.level() == 2);
  CHECK(VoxelKey::encode(1, 0, 0) != VoxelKey::encode(0, 1, 0));
}

TEST_CASE("field invariants are enforced") {
  const SceneBounds b;
  auto vox = [&](std::uint32_t i, double w) { return lattice_voxel(4, b, i, 0, 0, w); };
  CHECK_NOTHROW(ProbabilityField(4, b, {vox(0, 1), vox(1, 0)}));
  CHECK_THROWS_AS(ProbabilityField(4, b, {}), Error);
  CHECK_THROWS_AS(ProbabilityField(4, b, {vox(0, 0), vox(1, 0)}), Error);
  CHECK_THROWS_AS(ProbabilityField(4, b, {vox(0, 1), vox(0, 2)}), Error);
  CHECK_THROWS_AS(ProbabilityField(4, b, {vox(0, -1), vox(1, 1)}), Error);
  Voxel off = vox(2, 1);
  off.center.x += 0.01;
  CHECK_THROWS_AS(ProbabilityField(4, b, {off}), Error);
  Voxel wrong_size = vox(2, 1);
  wrong_size.size *= 2;
  CHECK_THROWS_AS(ProbabilityField(4, b, {wrong_size}), Error);
}

TEST_CASE("point set and camera invariants") {
  PointSet p;
  p.positions = {{0, 0, 0}};
  p.opacities = {1.5};
  p.sh = {ShBlock{}};
  CHECK_THROWS_AS(p.validate(), Error);
  p.opacities = {0.5};
  CHECK_NOTHROW(p.validate());
  p.positions[0].x = std::nan("");
  CHECK_THROWS_AS(p.validate(), Error);

  CameraView c = centered_camera(8, 8, 10);
  c.z_near = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("scene container round trips bit-exactly") {
  Scene s = generate_scene(SceneKind::Blobs, 5, 32, CameraRig{3, 40, 30});
  s.cameras[1].distortion = RadialDistortion{0.01, -0.002};
  PointSet pts;
  const AppearanceOracle oracle(s.oracle_seed);
  std::vector<Vec3> pos{{0.1, 0.2, 0.3}, {-0.5, 0.25, 1.0 / 3.0}};
  pts.positions = pos;
  const auto app = query_appearance(oracle, pos);
  pts.opacities = app.opacities;
  pts.sh = app.sh;
  s.points = pts;
  const auto bytes = encode_scene(s);
  const Scene back = decode_scene(bytes);
  CHECK(back == s);
  CHECK(encode_scene(back) == bytes);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 5);
  CHECK_THROWS_AS(decode_scene(truncated), Error);
}

TEST_CASE("feature images and maps round trip through files") {
  const auto dir = std::filesystem::temp_directory_path() / ("inpc_scene_core_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  FeatureImage img(3, 2);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    img.features[i] = {0.1 * i, -1.0 / 3.0, 2.0, 1e-30};
    img.transmittance[i] = 1.0 / (i + 1);
  }
  write_feature_image(dir / "img", img);
  const FeatureImage back = read_feature_image(dir / "img");
  CHECK(back.width == 3);
  CHECK(back.height == 2);
  // Dumps are float32.
  for (std::size_t i = 0; i < img.pixel_count(); ++i)
    for (int c = 0; c < 4; ++c) CHECK(back.features[i][c] == static_cast<double>(static_cast<float>(img.features[i][c])));
  CHECK_THROWS_AS(read_feature_image(dir / "missing"), Error);
  std::filesystem::remove_all(dir);
}
