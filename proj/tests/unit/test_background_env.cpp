#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "inpc/appearance.hpp"
#include "inpc/envmap.hpp"
#include "inpc/error.hpp"
#include "inpc/pipeline.hpp"
#include "inpc/verify.hpp"

using namespace inpc;

namespace {

EnvironmentMap random_map(int h, std::uint64_t seed) {
  EnvironmentMap map(h, 2 * h);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& t : map.texels())
    for (double& v : t) v = u(rng);
  return map;
}

// Lookup in a map whose columns are repeated twice, so no wrap is needed.
Feature4 unwrapped_lookup(const EnvironmentMap& map, const Vec3& dir) {
  const Vec3 d = normalize(dir);
  const double u = (std::atan2(d.x, d.z) / (2 * std::numbers::pi) + 0.5) * map.width();
  const double v = std::acos(std::clamp(d.y, -1.0, 1.0)) / std::numbers::pi * map.height();
  double x = u - 0.5;
  if (x < 0) x += map.width();
  const int c0 = static_cast<int>(std::floor(x));
  const double fx = x - c0;
  const double y = v - 0.5;
  const int r0 = static_cast<int>(std::floor(y));
  const double fy = y - r0;
  auto col = [&](int c) { return c % map.width(); };
  Feature4 out;
  for (int ch = 0; ch < 4; ++ch) {
    const double top = map.at(r0, col(c0))[ch] * (1 - fx) + map.at(r0, col(c0 + 1))[ch] * fx;
    const double bottom = map.at(r0 + 1, col(c0))[ch] * (1 - fx) + map.at(r0 + 1, col(c0 + 1))[ch] * fx;
    out[ch] = top * (1 - fy) + bottom * fy;
  }
  return out;
}

Feature4 band_limited(const Vec3& d) { return BackgroundOracle(7)(d); }

std::vector<double> window_means(const std::vector<double>& loss, std::size_t start, std::size_t width) {
  std::vector<double> out;
  for (std::size_t b = start; b + width <= loss.size(); b += width) {
    double acc = 0;
    for (std::size_t i = b; i < b + width; ++i) acc += loss[i];
    out.push_back(acc / width);
  }
  return out;
}

}  // namespace

TEST_CASE("sample_env: constant map") {
  const Feature4 k{0.25, -1.5, 3.0, 0.0};
  const EnvironmentMap map(8, 16, k);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 d = sphere_direction(to_unit(rng()), to_unit(rng()));
    CHECK(sample_env(map, d) == k);
  }
  CHECK(sample_env(map, {0, 1, 0}) == k);
  CHECK(sample_env(map, {0, -1, 0}) == k);
}

TEST_CASE("sample_env: texel centers are interpolation nodes") {
  const EnvironmentMap map = random_map(16, 2);
  for (int row = 0; row < map.height(); ++row) {
    for (int col = 0; col < map.width(); col += 3) {
      const Vec3 d = env_texel_direction(map, row, col);
      const EnvTaps taps = env_taps(map, d);
      CHECK(*std::max_element(taps.weight.begin(), taps.weight.end()) == doctest::Approx(1.0).epsilon(1e-9));
      const Feature4 f = sample_env(map, d);
      for (int c = 0; c < 4; ++c) CHECK(std::abs(f[c] - map.at(row, col)[c]) < 1e-9);
    }
  }
}

TEST_CASE("sample_env: seam wraps like the unwrapped map") {
  const EnvironmentMap map = random_map(12, 3);
  // Directions with azimuth close to the u = 0 seam (-z axis).
  for (int i = -20; i <= 20; ++i) {
    for (double theta : {0.6, 1.3, 2.2}) {
      const double phi = std::numbers::pi + i * 0.01;
      const Vec3 d{std::sin(theta) * std::sin(phi), std::cos(theta), std::sin(theta) * std::cos(phi)};
      const Feature4 a = sample_env(map, d), b = unwrapped_lookup(map, d);
      for (int c = 0; c < 4; ++c) CHECK(std::abs(a[c] - b[c]) < 1e-12);
    }
  }
}

TEST_CASE("sample_env: texel gradients") {
  const EnvironmentMap map = random_map(10, 4);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const EnvTaps taps = env_taps(map, sphere_direction(to_unit(rng()), to_unit(rng())));
    CHECK(taps.weight[0] + taps.weight[1] + taps.weight[2] + taps.weight[3] == doctest::Approx(1.0).epsilon(1e-15));
  }
  const GradcheckStats stats = gradcheck_env_texels(6, 64);
  INFO(stats.worst);
  CHECK(stats.max_rel_error < 1e-8);
}

TEST_CASE("sample_env: errors") {
  const EnvironmentMap map(4, 8);
  CHECK_THROWS_AS(sample_env(map, {0, 0, 0}), Error);
  CHECK_THROWS_AS(EnvironmentMap(4, 9), Error);
}

TEST_CASE("distill: schedule and defaults") {
  const DistillConfig full = DistillConfig::full_scale();
  CHECK(full.height == 1024);
  CHECK(full.width == 2048);
  CHECK(full.iterations == 1000);
  CHECK(full.batch == (1ull << 21));
  const DistillConfig desk;
  CHECK(desk.height == 256);
  CHECK(desk.width == 512);
  CHECK(desk.batch == (1ull << 16));
  CHECK(desk.learning_rate(0) == doctest::Approx(0.01));
  CHECK(desk.learning_rate(999) == doctest::Approx(0.001));
  CHECK(desk.learning_rate(500) < desk.learning_rate(499));
}

TEST_CASE("distill: constant oracle is fit exactly") {
  DistillConfig cfg;
  cfg.height = 16;
  cfg.width = 32;
  cfg.iterations = 50;
  cfg.batch = 2048;
  const Feature4 k{0.3, -0.2, 1.7, 0.05};
  const DistillResult r = distill_env([&](const Vec3&) { return k; }, cfg);
  CHECK(env_mse(r.map, [&](const Vec3&) { return k; }, 10000, 1) < 1e-10);
}

TEST_CASE("distill: windowed loss decreases and map is deterministic") {
  DistillConfig cfg;
  cfg.height = 32;
  cfg.width = 64;
  cfg.iterations = 410;
  cfg.batch = 4096;
  cfg.seed = 3;
  const DistillResult r = distill_env(band_limited, cfg);
  REQUIRE(r.loss.size() == 410);
  const auto means = window_means(r.loss, 10, 100);
  REQUIRE(means.size() == 4);
  for (std::size_t i = 1; i < means.size(); ++i) CHECK(means[i] <= means[i - 1]);
  CHECK(r.loss.back() < r.loss.front());

  cfg.threads = 3;
  const DistillResult again = distill_env(band_limited, cfg);
  CHECK(again.map.texels() == r.map.texels());
  CHECK(again.loss == r.loss);
}

TEST_CASE("distill: non-finite oracle aborts") {
  DistillConfig cfg;
  cfg.height = 4;
  cfg.width = 8;
  cfg.iterations = 3;
  cfg.batch = 64;
  cfg.mean_samples = 16;
  try {
    distill_env([](const Vec3& d) { return Feature4{d.x > 0.5 ? NAN : 0.0, 0, 0, 0}; }, cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numerical);
  }
}

TEST_CASE("distill: rendering with the map stays close to the oracle") {
  DistillConfig cfg;
  cfg.height = 64;
  cfg.width = 128;
  cfg.iterations = 200;
  cfg.batch = 1 << 14;
  cfg.seed = 1;
  cfg.threads = 4;
  const DistillResult r = distill_env(band_limited, cfg);

  const RandomScene scene = make_random_scene(3);
  CameraView cam = scene.camera;
  cam.world_to_camera = RigidTransform::look_at({0.3, 0.2, -1}, {0, 0, 4}, {0, 1, 0});
  DirectionCache cache;
  const auto bg_oracle = camera_background(cam, cache, band_limited);
  const auto bg_map = camera_background(cam, cache, [&](const Vec3& d) { return sample_env(r.map, d); });
  const FeatureImage a = render_tiled(scene.points, cam, bg_oracle);
  const FeatureImage b = render_tiled(scene.points, cam, bg_map);
  double worst = 0;
  for (std::size_t p = 0; p < a.pixel_count(); ++p)
    for (int c = 0; c < 4; ++c) worst = std::max(worst, std::abs(a.features[p][c] - b.features[p][c]));
  CHECK(worst < 1e-2);
}
