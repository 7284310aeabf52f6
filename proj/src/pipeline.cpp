#include "inpc/pipeline.hpp"

#include <cmath>

#include "inpc/error.hpp"

namespace inpc {

SamplerMode parse_sampler_mode(std::string_view name) {
  if (name == "resample") return SamplerMode::Resample;
  if (name == "ring") return SamplerMode::Ring;
  if (name == "global") return SamplerMode::Global;
  fail("unknown sampler '" + std::string(name) + "' (expected resample, ring or global)");
}

const char* to_string(SamplerMode mode) {
  switch (mode) {
    case SamplerMode::Resample:
      return "resample";
    case SamplerMode::Ring:
      return "ring";
    case SamplerMode::Global:
      return "global";
  }
  return "?";
}

SplatMode parse_splat_mode(std::string_view name) {
  if (name == "bilinear") return SplatMode::Bilinear;
  if (name == "gaussian") return SplatMode::Gaussian;
  fail("unknown splat mode '" + std::string(name) + "' (expected bilinear or gaussian)");
}

const char* to_string(SplatMode mode) { return mode == SplatMode::Bilinear ? "bilinear" : "gaussian"; }

SortMode parse_sort_mode(std::string_view name) {
  if (name == "single64") return SortMode::Single64;
  if (name == "two-stage") return SortMode::TwoStage;
  fail("unknown sort mode '" + std::string(name) + "' (expected single64 or two-stage)");
}

const char* to_string(SortMode mode) { return mode == SortMode::Single64 ? "single64" : "two-stage"; }

FrameSampler::FrameSampler(const ProbabilityField& field, std::span<const CameraView> cameras,
                           const AppearanceOracle& oracle, SamplerConfig config)
    : field_(field),
      cameras_(cameras.begin(), cameras.end()),
      oracle_(oracle),
      config_(config),
      ring_(config.mode == SamplerMode::Ring ? config.buffer : 1) {
  if (config_.points == 0) fail("FrameSampler: point budget must be positive");
  if (config_.mode == SamplerMode::Ring && config_.buffer == 0) fail("FrameSampler: ring buffer capacity must be positive");
  if (config_.mode == SamplerMode::Global && cameras_.empty()) fail("FrameSampler: global extraction needs cameras");
}

std::uint64_t FrameSampler::frame_seed(std::uint64_t frame) const { return mix64(config_.seed ^ mix64(frame + 1)); }

std::size_t FrameSampler::held_clouds() const { return config_.mode == SamplerMode::Ring ? ring_.size() : 1; }

const PointSet& FrameSampler::cloud_for(const CameraView& camera, std::uint64_t frame) {
  if (last_frame_ && frame <= *last_frame_) fail("FrameSampler: frames must be strictly increasing");
  last_frame_ = frame;
  switch (config_.mode) {
    case SamplerMode::Resample:
      current_ = sample_view(field_, camera, oracle_, config_.points, frame_seed(frame), config_.pdf, config_.threads);
      ++extractions_;
      break;
    case SamplerMode::Ring:
      ring_.push(sample_view(field_, camera, oracle_, ring_frame_budget(config_.points, config_.buffer), frame_seed(frame),
                             config_.pdf, config_.threads),
                 frame);
      ++extractions_;
      current_ = ring_.assemble();
      break;
    case SamplerMode::Global:
      if (extractions_ == 0) {
        current_ = global_extract(field_, cameras_, oracle_, config_.points, config_.seed, config_.pdf);
        ++extractions_;
      }
      break;
  }
  return current_;
}

std::vector<Feature4> camera_background(const CameraView& camera, DirectionCache& cache,
                                        const std::function<Feature4(const Vec3&)>& radiance) {
  const auto lookup = cache.get(camera);
  const std::vector<Vec3> dirs = world_ray_directions(camera, *lookup.grid);
  return background_image(dirs, radiance);
}

double mean_abs_difference(const FeatureImage& a, const FeatureImage& b) {
  if (a.width != b.width || a.height != b.height) fail("mean_abs_difference: image size mismatch");
  if (a.pixel_count() == 0) return 0.0;
  double sum = 0;
  for (std::size_t p = 0; p < a.pixel_count(); ++p)
    for (int c = 0; c < kFeatureChannels; ++c) sum += std::abs(a.features[p][c] - b.features[p][c]);
  return sum / static_cast<double>(a.pixel_count() * kFeatureChannels);
}

double conservation_error(const PointSet& points, const CameraView& camera, const RenderOptions& options) {
  const PreparedScene prepared = prepare_scene(points, camera, options);
  const auto fragments = gen_fragments(prepared.splats);
  PixelFragments lists =
      group_by_pixel(sort_single64(fragments, camera.width, camera.height).fragments, camera.width, camera.height);
  const std::vector<Feature4> ones(points.size(), Feature4{1, 1, 1, 1});
  const std::vector<Feature4> background(camera.pixel_count(), Feature4{1, 1, 1, 1});
  const FeatureImage img = blend_forward(lists, BlendInputs{points.opacities, ones}, background, options.blend);
  double worst = 0;
  for (const Feature4& f : img.features) worst = std::max(worst, std::abs(f[0] - 1.0));
  return worst;
}

}  // namespace inpc
