#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "inpc/math.hpp"
#include "inpc/radix_sort.hpp"
#include "inpc/scene.hpp"

namespace inpc {

inline constexpr int kTileSize = 8;
inline constexpr int kMaxTileBits = 15;
inline constexpr double kMaxAlpha = 0.9999;

/// Points surviving near-plane culling, in ascending source-index order.
struct ProjectedPoints {
  std::vector<std::uint32_t> index;
  std::vector<std::array<double, 2>> pixel;
  std::vector<double> depth;

  std::size_t size() const { return index.size(); }
};

ProjectedPoints project_points(const PointSet& points, const CameraView& camera);

/// Unit world-space direction from the camera center to every point (used for SH evaluation).
std::vector<Vec3> point_view_directions(const PointSet& points, const CameraView& camera);

enum class SplatMode { Bilinear, Gaussian };
enum class SortMode { Single64, TwoStage };

/// Screen-space footprint of one point with its clipped pixel bounding box (x1/y1 inclusive).
struct Splat {
  std::uint32_t point = 0;
  double depth = 0;
  double u = 0, v = 0;
  // Gaussian footprints only: inverse covariance (a b; b c) and truncation radius in pixels.
  double inv_a = 0, inv_b = 0, inv_c = 0;
  double radius = 0;
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;

  bool empty() const { return x1 < x0 || y1 < y0; }
};

struct SplatList {
  SplatMode mode = SplatMode::Bilinear;
  int width = 0, height = 0;
  std::vector<Splat> splats;
};

/// Bilinear 2x2 footprints for projected points.
SplatList make_bilinear_splats(const ProjectedPoints& projected, int width, int height);

/// Weight of a splat at a pixel center; zero outside its footprint.
double splat_weight(SplatMode mode, const Splat& splat, int x, int y);

struct Fragment {
  std::uint32_t pixel = 0;
  std::uint32_t point = 0;
  double depth = 0;
  double weight = 0;
};

/// Expands splats into per-pixel fragments (splat order, row-major within a splat); zero weights dropped.
std::vector<Fragment> gen_fragments(const SplatList& splats);
/// Fragments of the 2x2 bilinear footprint around every projected point.
std::vector<Fragment> gen_fragments_bilinear(const ProjectedPoints& projected, int width, int height);

/// Fragments grouped by pixel (CSR): fragments[offsets[p] .. offsets[p+1]) belong to pixel p.
struct PixelFragments {
  int width = 0, height = 0;
  std::vector<std::size_t> offsets;
  std::vector<Fragment> fragments;

  std::span<const Fragment> pixel(std::size_t p) const {
    return std::span<const Fragment>(fragments).subspan(offsets[p], offsets[p + 1] - offsets[p]);
  }
};

int pixel_index_bits(int width, int height);
std::uint64_t sort_key64(std::uint32_t pixel, double depth);

struct SingleSortResult {
  std::vector<Fragment> fragments;
  SortStats stats;
};

/// Baseline pipeline: one stable radix sort over 64-bit (pixel, depth) keys.
SingleSortResult sort_single64(std::span<const Fragment> fragments, int width, int height);

/// Groups pixel-sorted fragments into per-pixel lists.
PixelFragments group_by_pixel(std::vector<Fragment> sorted, int width, int height);

struct TwoStageStats {
  SortStats depth_sort;
  SortStats tile_sort;

  std::size_t pass_key_product() const { return depth_sort.pass_key_product() + tile_sort.pass_key_product(); }
  std::size_t key_bytes() const { return depth_sort.key_bytes + tile_sort.key_bytes; }
};

/// Per-tile splat lists, each in ascending (depth key, point index) order.
struct TileBins {
  int tiles_x = 0, tiles_y = 0;
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> entries;  // indices into SplatList::splats
  TwoStageStats stats;

  std::size_t tile_count() const { return static_cast<std::size_t>(tiles_x) * tiles_y; }
  std::span<const std::uint32_t> tile(std::size_t t) const {
    return std::span<const std::uint32_t>(entries).subspan(offsets[t], offsets[t + 1] - offsets[t]);
  }
};

int tile_index_bits(int width, int height);

/// Tiled pipeline: radix sort splats by 32-bit depth, emit one 16-bit tile key per overlapped
/// tile, then stable radix sort the copies by tile.
TileBins sort_two_stage(const SplatList& splats);

struct BlendOptions {
  /// Verify per-pixel depth order before blending.
  bool check_order = false;
  /// Reproduce the legacy behavior that skips gradients of zero-alpha fragments.
  bool skip_zero_alpha = false;
};

/// Per-point inputs for blending: opacities and evaluated features, indexed by source point.
struct BlendInputs {
  std::span<const double> opacities;
  std::span<const Feature4> features;
};

inline double fragment_alpha(double opacity, double weight) { return std::min(opacity * weight, kMaxAlpha); }

/// Front-to-back alpha blending with background compositing.
FeatureImage blend_forward(const PixelFragments& lists, const BlendInputs& inputs, std::span<const Feature4> background,
                           const BlendOptions& options = {});

struct GradientBuffers {
  std::vector<double> opacity;
  std::vector<Feature4> features;
  std::vector<ShBlock> sh;
};

/// Gradients of sum_p <upstream_p, F_p> w.r.t. opacities, features and SH coefficients.
/// `view_dirs` are the per-point SH directions used in the forward pass.
GradientBuffers blend_backward(const PixelFragments& lists, const BlendInputs& inputs, std::span<const Vec3> view_dirs,
                               std::span<const Feature4> background, std::span<const Feature4> upstream,
                               const BlendOptions& options = {});

struct GaussianOptions {
  double dilation = 0.16;
  double near_plane_std_px = 5.0;
};

struct RenderOptions {
  SplatMode splat = SplatMode::Bilinear;
  SortMode sort = SortMode::TwoStage;
  unsigned threads = 1;
  GaussianOptions gaussian;
  BlendOptions blend;
};

/// Everything a renderer derives from (points, camera) before blending.
struct PreparedScene {
  std::vector<Vec3> view_dirs;
  std::vector<Feature4> features;
  SplatList splats;
};

PreparedScene prepare_scene(const PointSet& points, const CameraView& camera, const RenderOptions& options);

/// Brute-force reference: global fragment gather, comparison sort per pixel, blend.
FeatureImage render_reference(const PointSet& points, const CameraView& camera, std::span<const Feature4> background,
                              const RenderOptions& options = {});

struct RenderStats {
  std::size_t projected_points = 0;
  std::size_t fragments = 0;
  SortStats single_sort;
  TwoStageStats two_stage;
};

/// Production renderer; SortMode::TwoStage blends tiles in parallel.
FeatureImage render_tiled(const PointSet& points, const CameraView& camera, std::span<const Feature4> background,
                          const RenderOptions& options = {}, RenderStats* stats = nullptr);

/// Tile-parallel backward pass of render_tiled (bilinear splats) with a fixed-order gradient merge.
GradientBuffers render_tiled_backward(const PointSet& points, const CameraView& camera,
                                      std::span<const Feature4> background, std::span<const Feature4> upstream,
                                      const RenderOptions& options = {});

/// Background feature per pixel from a direction -> feature callable.
template <typename Fn>
std::vector<Feature4> background_image(std::span<const Vec3> world_dirs, Fn&& radiance) {
  std::vector<Feature4> out(world_dirs.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = radiance(world_dirs[i]);
  return out;
}

}  // namespace inpc
