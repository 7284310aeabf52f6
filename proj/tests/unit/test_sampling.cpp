#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "inpc/error.hpp"
#include "inpc/pipeline.hpp"
#include "inpc/sampling.hpp"
#include "inpc/scenegen.hpp"
#include "inpc/verify.hpp"

using namespace inpc;

namespace {

const SceneBounds kBounds{};

// Identity rotation, eye at `eye`, looking down +z.
CameraView camera_at(const Vec3& eye, int w = 64, int h = 64, double f = 10) {
  CameraView c;
  c.fx = c.fy = f;
  c.cx = (w - 1) / 2.0;
  c.cy = (h - 1) / 2.0;
  c.width = w;
  c.height = h;
  c.z_near = 0.01;
  c.world_to_camera.translation = -eye;
  return c;
}

Voxel vox(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz, double w = 1.0) { return lattice_voxel(16, kBounds, ix, iy, iz, w); }

VoxelPDF make_pdf(std::vector<double> weights) {
  VoxelPDF pdf;
  for (std::size_t i = 0; i < weights.size(); ++i) pdf.voxels.push_back(static_cast<std::uint32_t>(i));
  pdf.normalization = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= pdf.normalization;
  pdf.weights = std::move(weights);
  return pdf;
}

bool inside(const Voxel& v, const Vec3& p) {
  const Vec3 o = v.origin();
  for (int a = 0; a < 3; ++a)
    if (p[a] < o[a] || p[a] > o[a] + v.size) return false;
  return true;
}

}  // namespace

TEST_CASE("view_pdf: single visible voxel has weight 1") {
  const ProbabilityField field(16, kBounds, {vox(8, 8, 8)});
  const Voxel& v = field.voxels()[0];
  const VoxelPDF pdf = view_pdf(field, camera_at({v.center.x, v.center.y, -0.5}));
  REQUIRE(pdf.size() == 1);
  CHECK(pdf.weights[0] == 1.0);
}

TEST_CASE("view_pdf: inverse square distance and behind-camera exclusion") {
  // Eye at d = 0.25 in front of voxel A and 2d in front of voxel B; voxel C is behind the eye.
  const ProbabilityField field(16, kBounds, {vox(8, 8, 8), vox(8, 8, 10), vox(8, 8, 0)});
  const auto voxels = field.voxels();
  const Vec3 eye{voxels[0].center.x, voxels[0].center.y, voxels[0].center.z - 0.25};
  REQUIRE(voxels[1].center.z - eye.z == doctest::Approx(0.5));
  const VoxelPDF pdf = view_pdf(field, camera_at(eye));
  REQUIRE(pdf.size() == 2);
  CHECK(pdf.voxels == std::vector<std::uint32_t>{0, 1});
  CHECK(pdf.weights[0] / pdf.weights[1] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(pdf.weights[0] + pdf.weights[1] == doctest::Approx(1.0).epsilon(1e-12));

  ViewPdfOptions cubic;
  cubic.distance_exponent = 3;
  const VoxelPDF pdf3 = view_pdf(field, camera_at(eye), cubic);
  CHECK(pdf3.weights[0] / pdf3.weights[1] == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("view_pdf: empty frustum is an error") {
  const ProbabilityField field(16, kBounds, {vox(8, 8, 0)});
  CHECK_THROWS_AS(view_pdf(field, camera_at({0, 0, 0.5})), Error);
}

TEST_CASE("allocate_counts: examples") {
  CHECK(allocate_counts(make_pdf({1.0}), 8, 1) == std::vector<std::uint64_t>{8});

  std::vector<double> w{0.999999};
  for (int i = 0; i < 10; ++i) w.push_back(1e-7);
  const auto counts = allocate_counts(make_pdf(w), 100, 3);
  CHECK(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}) == 100);
  for (std::size_t i = 1; i < counts.size(); ++i) CHECK(counts[i] >= 1);
  CHECK(counts[0] == 90);

  CHECK_THROWS_AS(allocate_counts(make_pdf(w), 10, 3), Error);
}

TEST_CASE("allocate_counts: sum and min-one over random pdfs") {
  const AllocationCheck check = check_allocate_counts(1000, 17);
  CHECK(check.pdfs == 1000);
  CHECK(check.sum_failures == 0);
  CHECK(check.min_one_failures == 0);
}

TEST_CASE("allocate_counts: frequencies within 3 sigma") {
  const std::vector<double> w{0.5, 0.25, 0.125, 0.0625, 0.0625};
  const std::uint64_t n = 1000000;
  const auto counts = allocate_counts(make_pdf(w), n, 99);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double sigma = std::sqrt(n * w[i] * (1 - w[i]));
    CHECK(std::abs(static_cast<double>(counts[i]) - n * w[i]) < 3 * sigma);
  }
}

TEST_CASE("rejection_sample: fully visible voxel never rejects") {
  const ProbabilityField field(16, kBounds, {vox(8, 8, 8), vox(7, 8, 9)});
  const CameraView cam = camera_at({0, 0, -1});
  const VoxelPDF pdf = view_pdf(field, cam);
  const std::vector<std::uint64_t> counts{50, 70};
  const RejectionResult r = rejection_sample(field, pdf, counts, cam, 5);
  CHECK(r.attempts == 120);
  CHECK(r.accepted == 120);
  for (std::size_t i = 0; i < 50; ++i) CHECK(inside(field.voxels()[0], r.positions[i]));
  for (std::size_t i = 50; i < 120; ++i) CHECK(inside(field.voxels()[1], r.positions[i]));

  const RejectionResult again = rejection_sample(field, pdf, counts, cam, 5, 4);
  CHECK(again.positions == r.positions);
  CHECK(rejection_sample(field, pdf, counts, cam, 6).positions != r.positions);
}

TEST_CASE("rejection_sample: clipped voxel accepts only visible points") {
  const ChiSquareResult chi = half_clipped_voxel_uniformity(100000, 3, 8, 2);
  CHECK(chi.misplaced == 0);
  CHECK(chi.dof == 511);
  CHECK(chi.p_value > 0.01);
}

TEST_CASE("sample_view: empty budget and identical frusta") {
  const Scene scene = generate_scene(SceneKind::Shell, 2, 32, CameraRig{2, 48, 32});
  const AppearanceOracle oracle(scene.oracle_seed);
  CHECK(sample_view(scene.field, scene.cameras[0], oracle, 0, 1).empty());

  const CameraView twin = scene.cameras[0];
  const PointSet a = sample_view(scene.field, scene.cameras[0], oracle, 20000, 9);
  const PointSet b = sample_view(scene.field, twin, oracle, 20000, 9, {}, 3);
  CHECK(a.size() == 20000);
  CHECK(a.positions == b.positions);
  CHECK(a.opacities == b.opacities);
  CHECK(a.sh == b.sh);
  CHECK_NOTHROW(a.validate());
}

TEST_CASE("halton: radical inverse and placement") {
  CHECK(radical_inverse(2, 1) == 0.5);
  CHECK(radical_inverse(2, 2) == 0.25);
  CHECK(radical_inverse(2, 3) == 0.75);
  CHECK(radical_inverse(3, 1) == doctest::Approx(1.0 / 3));
  CHECK(radical_inverse(5, 7) == doctest::Approx(2.0 / 5 + 1.0 / 25));

  const Voxel v = vox(3, 4, 5);
  CHECK(halton_points(v, 0, 10).empty());
  const auto pts = halton_points(v, 3, 1);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].x == doctest::Approx(v.origin().x + 0.5 * v.size));
  CHECK(pts[1].x == doctest::Approx(v.origin().x + 0.25 * v.size));
  CHECK(pts[2].x == doctest::Approx(v.origin().x + 0.75 * v.size));
  for (const Vec3& p : halton_points(v, 500, halton_start_index(v.key))) CHECK(inside(v, p));
  CHECK(halton_start_index(v.key) < (1u << 16));
}

TEST_CASE("halton: spread beats uniform random") {
  const SpreadComparison s = halton_vs_uniform_spread(4, 1024);
  CHECK(s.halton > s.uniform);
}

TEST_CASE("global_extract: weights are max over cameras") {
  const Scene scene = generate_scene(SceneKind::Blobs, 4, 32, CameraRig{6, 48, 32});
  const std::span<const CameraView> cams(scene.cameras);
  CHECK(global_weights(scene.field, cams.first(1)) == view_weights(scene.field, cams[0]));

  auto prev = global_weights(scene.field, cams.first(1));
  for (std::size_t k = 2; k <= cams.size(); ++k) {
    const auto next = global_weights(scene.field, cams.first(k));
    for (std::size_t v = 0; v < next.size(); ++v) REQUIRE(next[v] >= prev[v]);
    prev = next;
  }
}

TEST_CASE("global_extract: unseen voxel receives nothing") {
  // Voxel 2 sits behind the camera.
  const ProbabilityField field(16, kBounds, {vox(8, 8, 8), vox(7, 8, 9), vox(8, 8, 0)});
  const std::vector<CameraView> cams{camera_at({0, 0, -0.5})};
  const AppearanceOracle oracle(1);
  const PointSet pts = global_extract(field, cams, oracle, 5000, 2);
  CHECK(pts.size() == 5000);
  for (const Vec3& p : pts.positions) CHECK_FALSE(inside(field.voxels()[2], p));
  CHECK(global_extract(field, cams, oracle, 5000, 2).positions == pts.positions);
  CHECK_THROWS_AS(global_extract(field, {}, oracle, 10, 2), Error);
}

TEST_CASE("ring buffer: FIFO, sizes and order") {
  auto cloud = [](double tag, std::size_t n) {
    PointSet p;
    for (std::size_t i = 0; i < n; ++i) {
      p.positions.push_back({tag, static_cast<double>(i), 0});
      p.opacities.push_back(0.5);
      p.sh.push_back(ShBlock{});
    }
    return p;
  };
  RingBuffer ring(4);
  CHECK_THROWS_AS(ring.assemble(), Error);
  CHECK_THROWS_AS(ring.push(PointSet{}, 0), Error);
  for (int f = 0; f < 5; ++f) ring.push(cloud(f, 2 + f), f);
  CHECK(ring.size() == 4);
  CHECK(ring.entries().front().frame == 1);
  const PointSet all = ring.assemble();
  CHECK(all.size() == 3 + 4 + 5 + 6);
  CHECK(all.positions.front().x == 1);
  CHECK(all.positions[3].x == 2);
  CHECK(all.positions.back().x == 4);
  CHECK_THROWS_AS(ring.push(cloud(9, 1), 4), Error);
  CHECK(ring_frame_budget(1 << 20, 4) == (1 << 18));
}

TEST_CASE("frame sampler: ring steady state and global extraction") {
  const Scene scene = generate_scene(SceneKind::Shell, 3, 32, CameraRig{4, 48, 32});
  const AppearanceOracle oracle(scene.oracle_seed);
  SamplerConfig cfg;
  cfg.mode = SamplerMode::Ring;
  cfg.points = 40000;
  cfg.buffer = 4;
  FrameSampler ring(scene.field, scene.cameras, oracle, cfg);
  for (std::uint64_t f = 0; f < 6; ++f) {
    const PointSet& cloud = ring.cloud_for(scene.cameras[f % 4], f);
    CHECK(ring.held_clouds() == std::min<std::size_t>(f + 1, 4));
    CHECK(cloud.size() == 10000 * ring.held_clouds());
  }
  CHECK_THROWS_AS(ring.cloud_for(scene.cameras[0], 5), Error);

  cfg.mode = SamplerMode::Global;
  FrameSampler global(scene.field, scene.cameras, oracle, cfg);
  for (std::uint64_t f = 0; f < 4; ++f) CHECK(global.cloud_for(scene.cameras[f], f).size() == 40000);
  CHECK(global.extractions() == 1);
}
