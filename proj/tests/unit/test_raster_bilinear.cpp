#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "inpc/bench.hpp"
#include "inpc/error.hpp"
#include "inpc/pipeline.hpp"
#include "inpc/raster.hpp"
#include "inpc/verify.hpp"

using namespace inpc;

namespace {

CameraView pinhole(int w, int h, double f) {
  CameraView c;
  c.fx = c.fy = f;
  c.cx = (w - 1) / 2.0;
  c.cy = (h - 1) / 2.0;
  c.width = w;
  c.height = h;
  c.z_near = 0.1;
  return c;
}

PointSet single_point(const Vec3& p, double opacity = 0.5) {
  PointSet s;
  s.positions = {p};
  s.opacities = {opacity};
  s.sh = {ShBlock{}};
  return s;
}

ProjectedPoints at_pixels(const std::vector<std::array<double, 2>>& px) {
  ProjectedPoints p;
  for (std::size_t i = 0; i < px.size(); ++i) {
    p.index.push_back(static_cast<std::uint32_t>(i));
    p.pixel.push_back(px[i]);
    p.depth.push_back(1.0 + i);
  }
  return p;
}

PixelFragments one_pixel(std::vector<Fragment> frags) {
  PixelFragments lists;
  lists.width = lists.height = 1;
  lists.offsets = {0, frags.size()};
  lists.fragments = std::move(frags);
  return lists;
}

// Per-pixel fragment lists rebuilt from the tile bins, in tile order.
std::vector<std::vector<std::uint32_t>> pixel_order_from_tiles(const SplatList& splats, const TileBins& bins) {
  std::vector<std::vector<std::uint32_t>> out(static_cast<std::size_t>(splats.width) * splats.height);
  for (std::size_t t = 0; t < bins.tile_count(); ++t) {
    const int tx = static_cast<int>(t % bins.tiles_x), ty = static_cast<int>(t / bins.tiles_x);
    for (std::uint32_t e : bins.tile(t)) {
      const Splat& s = splats.splats[e];
      for (int y = ty * kTileSize; y < std::min(splats.height, (ty + 1) * kTileSize); ++y)
        for (int x = tx * kTileSize; x < std::min(splats.width, (tx + 1) * kTileSize); ++x)
          if (splat_weight(splats.mode, s, x, y) > 0) out[static_cast<std::size_t>(y) * splats.width + x].push_back(s.point);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("projection: axis, culling and pinhole offset") {
  const CameraView cam = pinhole(101, 81, 1000);
  const ProjectedPoints on_axis = project_points(single_point({0, 0, 3}), cam);
  REQUIRE(on_axis.size() == 1);
  CHECK(on_axis.pixel[0][0] == cam.cx);
  CHECK(on_axis.pixel[0][1] == cam.cy);
  CHECK(on_axis.depth[0] == 3);

  CHECK(project_points(single_point({0, 0, -1}), cam).size() == 0);
  CHECK(project_points(single_point({0, 0, 0.05}), cam).size() == 0);

  const ProjectedPoints off = project_points(single_point({0.1, 0, 1}), cam);
  REQUIRE(off.size() == 1);
  CHECK(off.pixel[0][0] == doctest::Approx(cam.cx + 100).epsilon(1e-14));
}

TEST_CASE("bilinear: node and block-center weights") {
  const auto node = gen_fragments_bilinear(at_pixels({{5, 7}}), 16, 16);
  // Zero-weight taps are dropped.
  REQUIRE(node.size() == 1);
  CHECK(node[0].weight == 1.0);
  CHECK(node[0].pixel == 7 * 16 + 5);

  const auto mid = gen_fragments_bilinear(at_pixels({{5.5, 7.5}}), 16, 16);
  REQUIRE(mid.size() == 4);
  for (const Fragment& f : mid) CHECK(f.weight == 0.25);
}

TEST_CASE("bilinear: weights sum to one") {
  const int w = 1024, h = 1024;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ux(0, w - 1), uy(0, h - 1);
  const std::size_t n = 1000000;
  std::vector<std::array<double, 2>> px(n);
  for (auto& p : px) p = {ux(rng), uy(rng)};
  const auto frags = gen_fragments_bilinear(at_pixels(px), w, h);
  std::vector<double> sum(n, 0.0);
  for (const Fragment& f : frags) sum[f.point] += f.weight;
  double worst = 0;
  for (double s : sum) worst = std::max(worst, std::abs(s - 1.0));
  CHECK(worst < 1e-12);
}

TEST_CASE("bilinear: contribution integrates to one over sub-pixel shifts") {
  // Pixel (3, 3) sees a point swept over [2, 4)^2.
  Splat s;
  const int steps = 200;
  double acc = 0;
  for (int i = 0; i < steps; ++i) {
    for (int j = 0; j < steps; ++j) {
      s.u = 2.0 + (i + 0.5) * 2.0 / steps;
      s.v = 2.0 + (j + 0.5) * 2.0 / steps;
      acc += splat_weight(SplatMode::Bilinear, s, 3, 3);
    }
  }
  CHECK(acc * 4.0 / (steps * steps) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single64 sort: depth order, stability and cost") {
  std::vector<Fragment> frags{{3, 0, 3.0, 1}, {3, 1, 1.5, 1}, {2, 2, 7.0, 1}, {3, 2, 1.5, 1}};
  const auto sorted = sort_single64(frags, 4, 4);
  REQUIRE(sorted.fragments.size() == 4);
  CHECK(sorted.fragments[0].point == 2);
  CHECK(sorted.fragments[1].depth == 1.5);
  CHECK(sorted.fragments[1].point == 1);
  CHECK(sorted.fragments[2].point == 2);
  CHECK(sorted.fragments[3].depth == 3.0);
  CHECK(sorted.stats.key_bytes == 8 * frags.size());
  CHECK(sorted.stats.passes == (32 + pixel_index_bits(4, 4) + 7) / 8);

  CHECK(pixel_index_bits(1920, 1080) == 21);
  CHECK(radix_passes(32 + 21) == 7);
  CHECK(depth_key(1.5) < depth_key(3.0));
  CHECK(sort_key64(5, 2.0) > sort_key64(4, 100.0));
}

TEST_CASE("two-stage sort: per-pixel order equals single sort") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const RandomScene scene = make_random_scene(seed, {300, 40, 24});
    RenderOptions opts;
    const PreparedScene prep = prepare_scene(scene.points, scene.camera, opts);
    const TileBins bins = sort_two_stage(prep.splats);
    const auto tiled = pixel_order_from_tiles(prep.splats, bins);
    const PixelFragments single =
        group_by_pixel(sort_single64(gen_fragments(prep.splats), 40, 24).fragments, 40, 24);
    for (std::size_t p = 0; p < tiled.size(); ++p) {
      std::vector<std::uint32_t> ref;
      for (const Fragment& f : single.pixel(p)) ref.push_back(f.point);
      REQUIRE(tiled[p] == ref);
    }
  }
}

TEST_CASE("two-stage sort: tile grid for 1080p") {
  CHECK(tile_index_bits(1920, 1080) == 15);
  CHECK(tile_index_bits(1920, 1080) == pixel_index_bits(1920, 1080) - 6);
  const TileBins bins = sort_two_stage(synthetic_splat_load(1920, 1080, 1000, 1));
  CHECK(bins.tiles_x == 240);
  CHECK(bins.tiles_y == 135);
  CHECK(bins.tile_count() == 32400);
  CHECK(bins.tile_count() <= (1u << 15));
  CHECK(kTileSize == 8);
}

TEST_CASE("blend_forward: hand-evaluated pixel") {
  const PixelFragments lists = one_pixel({{0, 0, 1.0, 1.0}, {0, 1, 2.0, 1.0}});
  const std::vector<double> op{0.5, 0.5};
  const std::vector<Feature4> feat{{1, 0, 0, 0}, {0, 1, 0, 0}};
  const std::vector<Feature4> bg{{0, 0, 0, 1}};
  const FeatureImage img = blend_forward(lists, {op, feat}, bg);
  CHECK(img.features[0] == Feature4{0.5, 0.25, 0, 0.25});
  CHECK(img.transmittance[0] == 0.25);

  const FeatureImage empty = blend_forward(one_pixel({}), {op, feat}, bg);
  CHECK(empty.features[0] == bg[0]);
  CHECK(empty.transmittance[0] == 1.0);

  const std::vector<double> opaque{1.0};
  const std::vector<Feature4> first{feat[0]};
  const FeatureImage clamp = blend_forward(one_pixel({{0, 0, 1.0, 1.0}}), {opaque, first}, bg);
  CHECK(clamp.transmittance[0] == doctest::Approx(1e-4).epsilon(1e-9));
  CHECK(clamp.features[0][0] == doctest::Approx(0.9999));
  CHECK(clamp.features[0][3] == doctest::Approx(1e-4));
}

TEST_CASE("blend_backward: zero alpha gradient is f - b") {
  const PixelFragments lists = one_pixel({{0, 0, 1.0, 1.0}});
  const std::vector<double> op{0.0};
  const double f = 0.7, b = 0.2;
  const std::vector<Feature4> feat{{f, 0, 0, 0}};
  const std::vector<Feature4> bg{{b, 0, 0, 0}};
  const std::vector<Vec3> dirs{{0, 0, 1}};
  const std::vector<Feature4> up{{1, 0, 0, 0}};
  const GradientBuffers g = blend_backward(lists, {op, feat}, dirs, bg, up);
  CHECK(g.opacity[0] == doctest::Approx(f - b).epsilon(1e-15));

  // Finite difference of a f + (1 - a) b.
  const double h = 1e-6;
  const double fd = (((h * f) + (1 - h) * b) - ((-h * f) + (1 + h) * b)) / (2 * h);
  CHECK(g.opacity[0] == doctest::Approx(fd).epsilon(1e-9));

  BlendOptions legacy;
  legacy.skip_zero_alpha = true;
  CHECK(blend_backward(lists, {op, feat}, dirs, bg, up, legacy).opacity[0] == 0.0);
}

TEST_CASE("blend_backward: zero upstream gives zero gradients") {
  const RandomScene scene = make_random_scene(4);
  const std::vector<Feature4> up(scene.camera.pixel_count(), Feature4{});
  const GradientBuffers g = render_tiled_backward(scene.points, scene.camera, scene.background, up);
  for (double v : g.opacity) REQUIRE(v == 0.0);
  for (const ShBlock& s : g.sh)
    for (double v : s) REQUIRE(v == 0.0);
}

TEST_CASE("blend_backward: finite differences on a 64x64 scene") {
  const RandomScene scene = make_random_scene(8);
  const GradcheckStats stats = gradcheck_blend(scene, SplatMode::Bilinear, 8, 150);
  CHECK(stats.checked >= 150);
  CHECK(stats.zero_alpha_checked > 0);
  INFO(stats.worst);
  CHECK(stats.max_rel_error < 1e-4);

  // Dropping alpha = 0 gradients breaks the check.
  BlendOptions legacy;
  legacy.skip_zero_alpha = true;
  CHECK(gradcheck_blend(scene, SplatMode::Bilinear, 8, 150, legacy).max_rel_error > 1e-2);
}

TEST_CASE("render: empty scene is pure background") {
  const RandomScene scene = make_random_scene(2);
  const FeatureImage img = render_tiled(PointSet{}, scene.camera, scene.background);
  CHECK(img.features == scene.background);
  for (double t : img.transmittance) CHECK(t == 1.0);
  CHECK(render_reference(PointSet{}, scene.camera, scene.background).features == scene.background);
}

TEST_CASE("render: tiled matches reference, both splat modes") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RandomSceneOptions o;
    o.distortion = seed % 2 == 0;
    const RandomScene scene = make_random_scene(seed, o);
    for (SplatMode mode : {SplatMode::Bilinear, SplatMode::Gaussian}) {
      RenderOptions opts;
      opts.splat = mode;
      const FeatureImage a = render_reference(scene.points, scene.camera, scene.background, opts);
      const FeatureImage b = render_tiled(scene.points, scene.camera, scene.background, opts);
      double worst = 0;
      for (std::size_t p = 0; p < a.pixel_count(); ++p)
        for (int c = 0; c < 4; ++c) worst = std::max(worst, std::abs(a.features[p][c] - b.features[p][c]));
      CHECK(worst < 1e-6);
    }
  }
}

TEST_CASE("render: permuting points changes nothing") {
  RandomSceneOptions o;
  o.duplicate_fraction = 0;
  const RandomScene scene = make_random_scene(6, o);
  std::vector<std::size_t> perm(scene.points.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(6));
  PointSet shuffled;
  for (std::size_t i : perm) {
    shuffled.positions.push_back(scene.points.positions[i]);
    shuffled.opacities.push_back(scene.points.opacities[i]);
    shuffled.sh.push_back(scene.points.sh[i]);
  }
  const FeatureImage a = render_tiled(scene.points, scene.camera, scene.background);
  const FeatureImage b = render_tiled(shuffled, scene.camera, scene.background);
  CHECK(a.features == b.features);
  CHECK(a.transmittance == b.transmittance);
}

TEST_CASE("render: bitwise independent of thread count") {
  RandomSceneOptions o;
  o.points = 20000;
  o.width = 200;
  o.height = 120;
  const RandomScene scene = make_random_scene(12, o);
  for (SortMode sort : {SortMode::TwoStage, SortMode::Single64}) {
    RenderOptions one;
    one.sort = sort;
    RenderOptions many = one;
    many.threads = 7;
    const FeatureImage a = render_tiled(scene.points, scene.camera, scene.background, one);
    const FeatureImage b = render_tiled(scene.points, scene.camera, scene.background, many);
    CHECK(a.features == b.features);
    CHECK(a.transmittance == b.transmittance);
  }
  const std::vector<Feature4> up(scene.camera.pixel_count(), Feature4{1, -0.5, 0.25, 2});
  RenderOptions many;
  many.threads = 5;
  const GradientBuffers g1 = render_tiled_backward(scene.points, scene.camera, scene.background, up);
  const GradientBuffers g5 = render_tiled_backward(scene.points, scene.camera, scene.background, up, many);
  CHECK(g1.opacity == g5.opacity);
  CHECK(g1.sh == g5.sh);
}

TEST_CASE("render: single64 and two-stage agree bitwise") {
  const RandomScene scene = make_random_scene(21);
  RenderOptions single;
  single.sort = SortMode::Single64;
  const FeatureImage a = render_tiled(scene.points, scene.camera, scene.background, single);
  const FeatureImage b = render_tiled(scene.points, scene.camera, scene.background);
  CHECK(a.features == b.features);
}

TEST_CASE("render: energy conservation") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RandomScene scene = make_random_scene(seed);
    for (SplatMode mode : {SplatMode::Bilinear, SplatMode::Gaussian}) {
      RenderOptions opts;
      opts.splat = mode;
      CHECK(conservation_error(scene.points, scene.camera, opts) < 1e-9);
    }
  }
}

TEST_CASE("render: background size is checked") {
  const RandomScene scene = make_random_scene(1);
  const std::vector<Feature4> short_bg(10);
  CHECK_THROWS_AS(render_tiled(scene.points, scene.camera, short_bg), Error);
}
