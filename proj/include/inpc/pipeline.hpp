#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "inpc/appearance.hpp"
#include "inpc/directions.hpp"
#include "inpc/raster.hpp"
#include "inpc/sampling.hpp"

namespace inpc {

enum class SamplerMode { Resample, Ring, Global };

SamplerMode parse_sampler_mode(std::string_view name);
const char* to_string(SamplerMode mode);
SplatMode parse_splat_mode(std::string_view name);
const char* to_string(SplatMode mode);
SortMode parse_sort_mode(std::string_view name);
const char* to_string(SortMode mode);

struct SamplerConfig {
  SamplerMode mode = SamplerMode::Resample;
  /// Points rendered per frame (ring mode: total over the full buffer).
  std::uint64_t points = 1ull << 20;
  std::size_t buffer = 4;
  std::uint64_t seed = 0;
  ViewPdfOptions pdf;
  unsigned threads = 1;
};

/// Produces the point cloud rendered at each frame of a trajectory.
class FrameSampler {
 public:
  /// `cameras` is only used by global pre-extraction.
  FrameSampler(const ProbabilityField& field, std::span<const CameraView> cameras, const AppearanceOracle& oracle,
               SamplerConfig config);

  /// Frames must be requested in strictly increasing order.
  const PointSet& cloud_for(const CameraView& camera, std::uint64_t frame);

  /// Clouds currently contributing to a frame (1 outside ring mode).
  std::size_t held_clouds() const;
  /// Number of point-cloud sampling passes run so far.
  std::size_t extractions() const { return extractions_; }
  const SamplerConfig& config() const { return config_; }

  /// Seed used for the cloud sampled at `frame`.
  std::uint64_t frame_seed(std::uint64_t frame) const;

 private:
  const ProbabilityField& field_;
  std::vector<CameraView> cameras_;
  const AppearanceOracle& oracle_;
  SamplerConfig config_;
  RingBuffer ring_;
  PointSet current_;
  std::optional<std::uint64_t> last_frame_;
  std::size_t extractions_ = 0;
};

/// Per-pixel background features for a camera, with ray directions from the cache.
std::vector<Feature4> camera_background(const CameraView& camera, DirectionCache& cache,
                                        const std::function<Feature4(const Vec3&)>& radiance);

/// Mean absolute per-channel difference of two same-sized images.
double mean_abs_difference(const FeatureImage& a, const FeatureImage& b);

/// Largest deviation from 1 of sum_i T_i alpha_i + T_{K+1} over all pixels, recomputed from the fragments.
double conservation_error(const PointSet& points, const CameraView& camera, const RenderOptions& options = {});

}  // namespace inpc
