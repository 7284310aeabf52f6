#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "inpc/raster.hpp"
#include "inpc/scene.hpp"
#include "json.hpp"

namespace inpc {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;

  void add(std::string name, bool passed, std::string detail);
  bool passed() const;
  std::string to_text() const;
  nlohmann::json to_json() const;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  /// Multiplies sample counts and iteration budgets (1 = full size).
  double scale = 1.0;
  unsigned threads = 1;
};

SuiteReport verify_gradcheck(const VerifyOptions& options = {});
SuiteReport verify_sampling(const VerifyOptions& options = {});
SuiteReport verify_tonemap(const VerifyOptions& options = {});
SuiteReport verify_envmap(const VerifyOptions& options = {});
/// Dispatches on "gradcheck", "sampling", "tonemap" or "envmap".
SuiteReport run_verify_suite(const std::string& suite, const VerifyOptions& options = {});

/// Randomized render test case: points around the origin seen by a camera at distance 4.
struct RandomScene {
  PointSet points;
  CameraView camera;
  std::vector<Feature4> background;
};

struct RandomSceneOptions {
  std::size_t points = 500;
  int width = 64;
  int height = 64;
  /// Fraction of points with opacity exactly 0.
  double zero_opacity_fraction = 0.1;
  /// Fraction of points duplicating an earlier point (equal depth and pixel).
  double duplicate_fraction = 0.02;
  /// Fraction of points placed behind the camera or before the near plane.
  double culled_fraction = 0.02;
  double max_opacity = 0.95;
  bool distortion = false;
};

RandomScene make_random_scene(std::uint64_t seed, const RandomSceneOptions& options = {});

/// |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor);

/// Five-point central difference.
template <typename Fn>
double central_difference(Fn&& f, double x, double h) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

struct GradcheckStats {
  std::size_t checked = 0;
  double max_rel_error = 0;
  std::string worst;
  /// Zero-opacity points among the checked opacities.
  std::size_t zero_alpha_checked = 0;

  void record(double analytic, double numeric, double floor, const std::string& what);
};

/// Finite-difference check of blend_backward for opacities, features and SH coefficients of up to
/// `max_points` points (zero-opacity points always included).
GradcheckStats gradcheck_blend(const RandomScene& scene, SplatMode mode, std::uint64_t seed, std::size_t max_points = 200,
                               const BlendOptions& options = {});

GradcheckStats gradcheck_cauchy(std::uint64_t seed, std::size_t count = 256);
GradcheckStats gradcheck_weight_decay(std::uint64_t seed, std::size_t count = 256);
GradcheckStats gradcheck_env_texels(std::uint64_t seed, std::size_t directions = 64);

struct ChiSquareResult {
  double statistic = 0;
  int dof = 0;
  double p_value = 0;
  std::uint64_t samples = 0;
  /// Samples outside the expected visible half of the voxel.
  std::uint64_t misplaced = 0;
};

/// Rejection sampling inside a voxel whose center lies on the left frustum plane; chi-square
/// uniformity over cells^3 bins of the visible half.
ChiSquareResult half_clipped_voxel_uniformity(std::uint64_t samples, std::uint64_t seed, int cells = 8, unsigned threads = 1);

struct AllocationCheck {
  std::size_t pdfs = 0;
  std::size_t sum_failures = 0;
  std::size_t min_one_failures = 0;
};

AllocationCheck check_allocate_counts(std::size_t pdfs, std::uint64_t seed);

/// Minimum pairwise distance of Halton and of uniform random points in a unit voxel.
struct SpreadComparison {
  double halton = 0;
  double uniform = 0;
};

SpreadComparison halton_vs_uniform_spread(std::uint64_t seed, std::size_t count = 4096);

struct RoundTripResult {
  std::uint64_t triples = 0;
  /// max |forward(inverse(y)) - y|.
  double display_error = 0;
  /// max |inverse(forward(x)) - x| for x in [0, 2^ev].
  double hdr_error = 0;
};

/// Random values, EV in [-4, 4] and random valid curves (K in [2, 64]).
RoundTripResult tonemap_round_trip(std::uint64_t triples, std::uint64_t seed);

}  // namespace inpc
