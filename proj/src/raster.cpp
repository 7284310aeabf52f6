#include "inpc/raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "inpc/error.hpp"
#include "inpc/gaussian.hpp"
#include "inpc/kernels.hpp"
#include "inpc/parallel.hpp"
#include "inpc/sh.hpp"

namespace inpc {
namespace {

struct PixelResult {
  Feature4 feature{};
  double transmittance = 1;
};

PixelResult blend_pixel(std::span<const Fragment> frags, const BlendInputs& in, const Feature4& bg) {
  PixelResult r;
  double t = 1.0;
  for (const Fragment& f : frags) {
    const double a = fragment_alpha(in.opacities[f.point], f.weight);
    const Feature4& feat = in.features[f.point];
    const double ta = t * a;
    for (int c = 0; c < kFeatureChannels; ++c) r.feature[c] += ta * feat[c];
    t *= 1.0 - a;
  }
  for (int c = 0; c < kFeatureChannels; ++c) r.feature[c] += t * bg[c];
  r.transmittance = t;
  return r;
}

void check_pixel_order(std::span<const Fragment> frags) {
  for (std::size_t i = 1; i < frags.size(); ++i) {
    const auto prev = depth_key(frags[i - 1].depth);
    const auto cur = depth_key(frags[i].depth);
    if (cur < prev || (cur == prev && frags[i].point < frags[i - 1].point))
      fail("blend: fragments are not depth-sorted");
  }
}

/// Scratch for one pixel's backward pass.
struct PixelGradSink {
  virtual void add(std::uint32_t point, double d_opacity, const Feature4& d_feature) = 0;
  virtual ~PixelGradSink() = default;
};

void backward_pixel(std::span<const Fragment> frags, const BlendInputs& in, const Feature4& bg, const Feature4& g,
                    const BlendOptions& options, std::vector<double>& t_scratch, PixelGradSink& sink) {
  t_scratch.resize(frags.size());
  double t = 1.0;
  for (std::size_t i = 0; i < frags.size(); ++i) {
    t_scratch[i] = t;
    t *= 1.0 - fragment_alpha(in.opacities[frags[i].point], frags[i].weight);
  }
  // behind = sum_{i>k} T_i a_i f_i + T_{K+1} f_bg, accumulated back to front.
  Feature4 behind{};
  for (int c = 0; c < kFeatureChannels; ++c) behind[c] = t * bg[c];
  for (std::size_t k = frags.size(); k-- > 0;) {
    const Fragment& f = frags[k];
    const double o = in.opacities[f.point];
    const double a = fragment_alpha(o, f.weight);
    const double tk = t_scratch[k];
    const Feature4& feat = in.features[f.point];
    double d_alpha = 0;
    const double inv_one_minus = 1.0 / (1.0 - a);
    for (int c = 0; c < kFeatureChannels; ++c) d_alpha += g[c] * (tk * feat[c] - behind[c] * inv_one_minus);
    if (options.skip_zero_alpha && a == 0.0) d_alpha = 0;
    Feature4 d_feat;
    for (int c = 0; c < kFeatureChannels; ++c) d_feat[c] = tk * a * g[c];
    const double d_opacity = (o * f.weight < kMaxAlpha) ? d_alpha * f.weight : 0.0;
    sink.add(f.point, d_opacity, d_feat);
    for (int c = 0; c < kFeatureChannels; ++c) behind[c] += tk * a * feat[c];
  }
}

struct DirectSink final : PixelGradSink {
  GradientBuffers& out;
  explicit DirectSink(GradientBuffers& o) : out(o) {}
  void add(std::uint32_t point, double d_opacity, const Feature4& d_feature) override {
    out.opacity[point] += d_opacity;
    for (int c = 0; c < kFeatureChannels; ++c) out.features[point][c] += d_feature[c];
  }
};

struct Contribution {
  std::uint32_t point;
  double d_opacity;
  Feature4 d_feature;
};

struct ListSink final : PixelGradSink {
  std::vector<Contribution>& out;
  explicit ListSink(std::vector<Contribution>& o) : out(o) {}
  void add(std::uint32_t point, double d_opacity, const Feature4& d_feature) override {
    out.push_back({point, d_opacity, d_feature});
  }
};

void chain_to_sh(GradientBuffers& grads, std::span<const Vec3> view_dirs) {
  for (std::size_t i = 0; i < grads.features.size(); ++i) {
    const auto basis = sh_basis(view_dirs[i]);
    for (int c = 0; c < kFeatureChannels; ++c)
      for (int j = 0; j < kShCoeffsPerChannel; ++j) grads.sh[i][c * kShCoeffsPerChannel + j] = grads.features[i][c] * basis[j];
  }
}

GradientBuffers zero_gradients(std::size_t n) {
  GradientBuffers g;
  g.opacity.assign(n, 0.0);
  g.features.assign(n, Feature4{});
  g.sh.assign(n, ShBlock{});
  return g;
}

/// Builds the per-pixel fragment lists of one tile from its depth-ordered splat list.
void gather_tile(const SplatList& splats, std::span<const std::uint32_t> entries, int tx, int ty,
                 std::vector<std::vector<Fragment>>& local) {
  local.resize(kTileSize * kTileSize);
  for (auto& l : local) l.clear();
  const int px0 = tx * kTileSize, py0 = ty * kTileSize;
  const int px1 = std::min(px0 + kTileSize, splats.width) - 1;
  const int py1 = std::min(py0 + kTileSize, splats.height) - 1;
  for (std::uint32_t idx : entries) {
    const Splat& s = splats.splats[idx];
    const int xa = std::max(s.x0, px0), xb = std::min(s.x1, px1);
    const int ya = std::max(s.y0, py0), yb = std::min(s.y1, py1);
    for (int y = ya; y <= yb; ++y) {
      for (int x = xa; x <= xb; ++x) {
        const double w = splat_weight(splats.mode, s, x, y);
        if (w <= 0) continue;
        const auto pixel = static_cast<std::uint32_t>(y) * static_cast<std::uint32_t>(splats.width) + static_cast<std::uint32_t>(x);
        local[(y - py0) * kTileSize + (x - px0)].push_back({pixel, s.point, s.depth, w});
      }
    }
  }
}

void check_image_inputs(const CameraView& camera, std::span<const Feature4> background) {
  camera.validate();
  if (background.size() != camera.pixel_count()) fail("background image does not match camera resolution");
}

}  // namespace

ProjectedPoints project_points(const PointSet& points, const CameraView& camera) {
  camera.validate();
  ProjectedPoints out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3 pc = camera.world_to_camera.apply(points.positions[i]);
    if (!(pc.z > camera.z_near)) continue;
    out.index.push_back(static_cast<std::uint32_t>(i));
    out.pixel.push_back(camera.project_camera_space(pc));
    out.depth.push_back(pc.z);
  }
  return out;
}

std::vector<Vec3> point_view_directions(const PointSet& points, const CameraView& camera) {
  const Vec3 eye = camera.origin();
  std::vector<Vec3> dirs(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3 d = points.positions[i] - eye;
    const double n = norm(d);
    dirs[i] = n > 0 ? d / n : Vec3{0, 0, 1};
  }
  return dirs;
}

SplatList make_bilinear_splats(const ProjectedPoints& projected, int width, int height) {
  SplatList list{SplatMode::Bilinear, width, height, {}};
  list.splats.reserve(projected.size());
  for (std::size_t i = 0; i < projected.size(); ++i) {
    Splat s;
    s.point = projected.index[i];
    s.depth = projected.depth[i];
    s.u = projected.pixel[i][0];
    s.v = projected.pixel[i][1];
    if (s.u > -2.0 && s.u < width + 1.0 && s.v > -2.0 && s.v < height + 1.0) {
      const int fx = static_cast<int>(std::floor(s.u));
      const int fy = static_cast<int>(std::floor(s.v));
      s.x0 = std::max(fx, 0);
      s.x1 = std::min(fx + 1, width - 1);
      s.y0 = std::max(fy, 0);
      s.y1 = std::min(fy + 1, height - 1);
    }
    list.splats.push_back(s);
  }
  return list;
}

double splat_weight(SplatMode mode, const Splat& s, int x, int y) {
  const double dx = x - s.u;
  const double dy = y - s.v;
  if (mode == SplatMode::Bilinear) return std::max(0.0, 1.0 - std::abs(dx)) * std::max(0.0, 1.0 - std::abs(dy));
  if (dx * dx + dy * dy > s.radius * s.radius) return 0.0;
  return std::exp(-0.5 * (s.inv_a * dx * dx + 2.0 * s.inv_b * dx * dy + s.inv_c * dy * dy));
}

std::vector<Fragment> gen_fragments(const SplatList& splats) {
  std::vector<Fragment> out;
  out.reserve(splats.splats.size() * 4);
  for (const Splat& s : splats.splats) {
    for (int y = s.y0; y <= s.y1; ++y) {
      for (int x = s.x0; x <= s.x1; ++x) {
        const double w = splat_weight(splats.mode, s, x, y);
        if (w <= 0) continue;
        out.push_back({static_cast<std::uint32_t>(y) * static_cast<std::uint32_t>(splats.width) + static_cast<std::uint32_t>(x),
                       s.point, s.depth, w});
      }
    }
  }
  return out;
}

std::vector<Fragment> gen_fragments_bilinear(const ProjectedPoints& projected, int width, int height) {
  return gen_fragments(make_bilinear_splats(projected, width, height));
}

int pixel_index_bits(int width, int height) {
  const std::uint64_t pixels = static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
  return pixels <= 1 ? 1 : static_cast<int>(std::bit_width(pixels - 1));
}

std::uint64_t sort_key64(std::uint32_t pixel, double depth) {
  return (static_cast<std::uint64_t>(pixel) << 32) | depth_key(depth);
}

SingleSortResult sort_single64(std::span<const Fragment> fragments, int width, int height) {
  const int pixel_bits = pixel_index_bits(width, height);
  if (pixel_bits > 32) fail("sort_single64: pixel index exceeds the 32-bit key budget");
  if (fragments.size() > 0xffffffffull) fail("sort_single64: too many fragments");
  std::vector<std::uint64_t> keys(fragments.size());
  std::vector<std::uint32_t> order(fragments.size());
  for (std::size_t i = 0; i < fragments.size(); ++i) {
    keys[i] = sort_key64(fragments[i].pixel, fragments[i].depth);
    order[i] = static_cast<std::uint32_t>(i);
  }
  SingleSortResult out;
  out.stats = radix_sort_pairs(keys, order, 32 + pixel_bits);
  out.fragments.resize(fragments.size());
  for (std::size_t i = 0; i < order.size(); ++i) out.fragments[i] = fragments[order[i]];
  return out;
}

PixelFragments group_by_pixel(std::vector<Fragment> sorted, int width, int height) {
  PixelFragments lists;
  lists.width = width;
  lists.height = height;
  const std::size_t pixels = static_cast<std::size_t>(width) * height;
  lists.offsets.assign(pixels + 1, 0);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].pixel >= pixels) fail("group_by_pixel: fragment outside the image");
    if (i > 0 && sorted[i].pixel < sorted[i - 1].pixel) fail("group_by_pixel: fragments are not pixel-sorted");
    ++lists.offsets[sorted[i].pixel + 1];
  }
  for (std::size_t p = 0; p < pixels; ++p) lists.offsets[p + 1] += lists.offsets[p];
  lists.fragments = std::move(sorted);
  return lists;
}

int tile_index_bits(int width, int height) {
  const std::uint64_t tiles = static_cast<std::uint64_t>((width + kTileSize - 1) / kTileSize) *
                              static_cast<std::uint64_t>((height + kTileSize - 1) / kTileSize);
  return tiles <= 1 ? 1 : static_cast<int>(std::bit_width(tiles - 1));
}

TileBins sort_two_stage(const SplatList& splats) {
  TileBins bins;
  bins.tiles_x = (splats.width + kTileSize - 1) / kTileSize;
  bins.tiles_y = (splats.height + kTileSize - 1) / kTileSize;
  const int tile_bits = tile_index_bits(splats.width, splats.height);
  if (tile_bits > kMaxTileBits) fail("sort_two_stage: tile count exceeds the 15-bit tile key (" + std::to_string(bins.tile_count()) + " tiles)");

  // Stage 1: depth order of splats.
  const std::size_t n = splats.splats.size();
  std::vector<std::uint32_t> depth_keys(n);
  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    depth_keys[i] = depth_key(splats.splats[i].depth);
    order[i] = static_cast<std::uint32_t>(i);
  }
  bins.stats.depth_sort = radix_sort_pairs(depth_keys, order, 32);

  // Stage 2: per-tile copies in depth order, stably sorted by tile.
  std::vector<std::uint16_t> tile_keys;
  std::vector<std::uint32_t> copies;
  tile_keys.reserve(n + n / 2);
  copies.reserve(n + n / 2);
  for (std::uint32_t idx : order) {
    const Splat& s = splats.splats[idx];
    if (s.empty()) continue;
    for (int ty = s.y0 / kTileSize; ty <= s.y1 / kTileSize; ++ty) {
      for (int tx = s.x0 / kTileSize; tx <= s.x1 / kTileSize; ++tx) {
        tile_keys.push_back(static_cast<std::uint16_t>(ty * bins.tiles_x + tx));
        copies.push_back(idx);
      }
    }
  }
  bins.stats.tile_sort = radix_sort_pairs(tile_keys, copies, tile_bits);

  bins.offsets.assign(bins.tile_count() + 1, 0);
  for (std::uint16_t k : tile_keys) ++bins.offsets[k + 1];
  for (std::size_t t = 0; t < bins.tile_count(); ++t) bins.offsets[t + 1] += bins.offsets[t];
  bins.entries = std::move(copies);
  return bins;
}

FeatureImage blend_forward(const PixelFragments& lists, const BlendInputs& inputs, std::span<const Feature4> background,
                           const BlendOptions& options) {
  const std::size_t pixels = static_cast<std::size_t>(lists.width) * lists.height;
  if (background.size() != pixels || lists.offsets.size() != pixels + 1) fail("blend_forward: image shape mismatch");
  if (inputs.opacities.size() != inputs.features.size()) fail("blend_forward: per-point input size mismatch");
  FeatureImage img(lists.width, lists.height);
  for (std::size_t p = 0; p < pixels; ++p) {
    const auto frags = lists.pixel(p);
    if (options.check_order) check_pixel_order(frags);
    const PixelResult r = blend_pixel(frags, inputs, background[p]);
    img.features[p] = r.feature;
    img.transmittance[p] = r.transmittance;
  }
  return img;
}

GradientBuffers blend_backward(const PixelFragments& lists, const BlendInputs& inputs, std::span<const Vec3> view_dirs,
                               std::span<const Feature4> background, std::span<const Feature4> upstream,
                               const BlendOptions& options) {
  const std::size_t pixels = static_cast<std::size_t>(lists.width) * lists.height;
  if (background.size() != pixels || upstream.size() != pixels || lists.offsets.size() != pixels + 1)
    fail("blend_backward: image shape mismatch");
  if (inputs.opacities.size() != inputs.features.size() || view_dirs.size() != inputs.features.size())
    fail("blend_backward: per-point input size mismatch");
  GradientBuffers grads = zero_gradients(inputs.features.size());
  DirectSink sink(grads);
  std::vector<double> scratch;
  for (std::size_t p = 0; p < pixels; ++p) {
    const auto frags = lists.pixel(p);
    if (options.check_order) check_pixel_order(frags);
    backward_pixel(frags, inputs, background[p], upstream[p], options, scratch, sink);
  }
  chain_to_sh(grads, view_dirs);
  return grads;
}

PreparedScene prepare_scene(const PointSet& points, const CameraView& camera, const RenderOptions& options) {
  if (points.opacities.size() != points.size() || points.sh.size() != points.size()) fail("render: point set arrays differ in length");
  PreparedScene prep;
  prep.view_dirs = point_view_directions(points, camera);
  prep.features.resize(points.size());
  kernels::eval_sh_batch(points.sh, prep.view_dirs, prep.features);
  const ProjectedPoints projected = project_points(points, camera);
  prep.splats = options.splat == SplatMode::Bilinear
                    ? make_bilinear_splats(projected, camera.width, camera.height)
                    : make_gaussian_splats(points, projected, camera, options.gaussian);
  return prep;
}

FeatureImage render_reference(const PointSet& points, const CameraView& camera, std::span<const Feature4> background,
                              const RenderOptions& options) {
  check_image_inputs(camera, background);
  const PreparedScene prep = prepare_scene(points, camera, options);
  std::vector<std::vector<Fragment>> per_pixel(camera.pixel_count());
  for (const Fragment& f : gen_fragments(prep.splats)) per_pixel[f.pixel].push_back(f);
  // Front-to-back compositing written out directly, independent of the tiled blend code.
  FeatureImage out(camera.width, camera.height);
  for (std::size_t p = 0; p < per_pixel.size(); ++p) {
    auto& frags = per_pixel[p];
    std::sort(frags.begin(), frags.end(), [](const Fragment& a, const Fragment& b) {
      const auto ka = depth_key(a.depth), kb = depth_key(b.depth);
      return ka != kb ? ka < kb : a.point < b.point;
    });
    Feature4 acc{};
    double t = 1.0;
    for (const Fragment& f : frags) {
      const double alpha = fragment_alpha(points.opacities[f.point], f.weight);
      for (int c = 0; c < 4; ++c) acc[c] += t * alpha * prep.features[f.point][c];
      t *= 1.0 - alpha;
    }
    for (int c = 0; c < 4; ++c) acc[c] += t * background[p][c];
    out.features[p] = acc;
    out.transmittance[p] = t;
  }
  return out;
}

FeatureImage render_tiled(const PointSet& points, const CameraView& camera, std::span<const Feature4> background,
                          const RenderOptions& options, RenderStats* stats) {
  check_image_inputs(camera, background);
  const PreparedScene prep = prepare_scene(points, camera, options);
  const BlendInputs inputs{points.opacities, prep.features};
  RenderStats local_stats;
  local_stats.projected_points = prep.splats.splats.size();

  if (options.sort == SortMode::Single64) {
    auto fragments = gen_fragments(prep.splats);
    local_stats.fragments = fragments.size();
    SingleSortResult sorted = sort_single64(fragments, camera.width, camera.height);
    local_stats.single_sort = sorted.stats;
    const PixelFragments lists = group_by_pixel(std::move(sorted.fragments), camera.width, camera.height);
    if (stats) *stats = local_stats;
    return blend_forward(lists, inputs, background, options.blend);
  }

  const TileBins bins = sort_two_stage(prep.splats);
  local_stats.two_stage = bins.stats;
  FeatureImage img(camera.width, camera.height);
  std::vector<std::size_t> tile_fragments(bins.tile_count(), 0);
  parallel_for(bins.tile_count(), options.threads, [&](std::size_t t) {
    thread_local std::vector<std::vector<Fragment>> local;
    const int tx = static_cast<int>(t % bins.tiles_x), ty = static_cast<int>(t / bins.tiles_x);
    gather_tile(prep.splats, bins.tile(t), tx, ty, local);
    for (int ly = 0; ly < kTileSize; ++ly) {
      for (int lx = 0; lx < kTileSize; ++lx) {
        const int x = tx * kTileSize + lx, y = ty * kTileSize + ly;
        if (x >= camera.width || y >= camera.height) continue;
        const auto& frags = local[ly * kTileSize + lx];
        if (options.blend.check_order) check_pixel_order(frags);
        const std::size_t p = static_cast<std::size_t>(y) * camera.width + x;
        const PixelResult r = blend_pixel(frags, inputs, background[p]);
        img.features[p] = r.feature;
        img.transmittance[p] = r.transmittance;
        tile_fragments[t] += frags.size();
      }
    }
  });
  for (std::size_t c : tile_fragments) local_stats.fragments += c;
  if (stats) *stats = local_stats;
  return img;
}

GradientBuffers render_tiled_backward(const PointSet& points, const CameraView& camera,
                                      std::span<const Feature4> background, std::span<const Feature4> upstream,
                                      const RenderOptions& options) {
  check_image_inputs(camera, background);
  if (upstream.size() != camera.pixel_count()) fail("render_tiled_backward: upstream gradient shape mismatch");
  if (options.splat != SplatMode::Bilinear) fail("render_tiled_backward: only bilinear splatting is differentiable");
  const PreparedScene prep = prepare_scene(points, camera, options);
  const BlendInputs inputs{points.opacities, prep.features};
  const TileBins bins = sort_two_stage(prep.splats);

  std::vector<std::vector<Contribution>> partials(bins.tile_count());
  parallel_for(bins.tile_count(), options.threads, [&](std::size_t t) {
    thread_local std::vector<std::vector<Fragment>> local;
    thread_local std::vector<double> scratch;
    const int tx = static_cast<int>(t % bins.tiles_x), ty = static_cast<int>(t / bins.tiles_x);
    gather_tile(prep.splats, bins.tile(t), tx, ty, local);
    ListSink sink(partials[t]);
    for (int ly = 0; ly < kTileSize; ++ly) {
      for (int lx = 0; lx < kTileSize; ++lx) {
        const int x = tx * kTileSize + lx, y = ty * kTileSize + ly;
        if (x >= camera.width || y >= camera.height) continue;
        const std::size_t p = static_cast<std::size_t>(y) * camera.width + x;
        backward_pixel(local[ly * kTileSize + lx], inputs, background[p], upstream[p], options.blend, scratch, sink);
      }
    }
  });

  GradientBuffers grads = zero_gradients(points.size());
  for (const auto& tile : partials) {
    for (const Contribution& c : tile) {
      grads.opacity[c.point] += c.d_opacity;
      for (int k = 0; k < kFeatureChannels; ++k) grads.features[c.point][k] += c.d_feature[k];
    }
  }
  chain_to_sh(grads, prep.view_dirs);
  return grads;
}

}  // namespace inpc
