#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "inpc/raster.hpp"

namespace inpc {

/// Tiles per splat assumed by the nominal per-point cost model.
inline constexpr double kNominalTilesPerSplat = 1.27;

/// Bilinear splats at uniform sub-pixel positions strictly inside a width x height image,
/// with depths uniform in [0.5, 50).
SplatList synthetic_splat_load(int width, int height, std::uint64_t n, std::uint64_t seed);

/// Mean number of 8x8 tiles overlapped by 2x2 splats at uniform random sub-pixel placements,
/// measured through the two-stage binning. The default 1025 x 1025 image makes the placement range
/// [0, 1024) span whole tile periods.
double tiles_per_splat_monte_carlo(std::uint64_t placements, std::uint64_t seed, int width = 1025, int height = 1025);

struct PipelineCost {
  std::size_t keys = 0;
  int key_bits = 0;
  int passes = 0;
  std::size_t pass_key_product = 0;
  std::size_t key_bytes = 0;
};

/// Sort-cost accounting of the single 64-bit sort against the two-stage sort on one splat load.
struct SortCostReport {
  int width = 0, height = 0;
  std::size_t points = 0;
  std::size_t fragments = 0;
  PipelineCost baseline;
  PipelineCost depth_stage;
  PipelineCost tile_stage;
  double tiles_per_splat = 0;

  /// Pass-key products divided by the number of points.
  double baseline_cost_per_point() const;
  double two_stage_cost_per_point() const;
  double pass_cost_ratio() const;
  /// Key bytes per point: one 64-bit key against a 32-bit depth key plus 16-bit tile keys.
  static double per_point_memory_ratio(double tiles_per_splat);
  double measured_key_bytes_ratio() const;
};

SortCostReport measure_sort_costs(const SplatList& load);

std::string sort_costs_csv(const std::vector<SortCostReport>& reports);
std::string sort_costs_markdown(const std::vector<SortCostReport>& reports);

/// Median wall time in seconds of `runs` calls after one warm-up call.
double median_seconds(const std::function<void()>& fn, int runs = 5);

}  // namespace inpc
