#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "inpc/appearance.hpp"
#include "inpc/scene.hpp"

namespace inpc {

struct ViewPdfOptions {
  /// Exponent of the (size / distance) factor.
  double distance_exponent = 2.0;
  /// Sub-points per axis used to estimate the fraction of a voxel inside the frustum.
  int visibility_lattice = 4;
};

/// Normalized view-specific sampling distribution over the visible voxels of a field.
struct VoxelPDF {
  std::vector<std::uint32_t> voxels;  // indices into ProbabilityField::voxels(), ascending
  std::vector<double> weights;        // normalized, sums to 1
  double normalization = 0;           // sum of the unnormalized weights

  std::size_t size() const { return voxels.size(); }
};

/// Fraction of the voxel's sub-point lattice inside the camera frustum.
double visible_fraction(const Voxel& voxel, const CameraView& camera, int lattice = 4);

/// Unnormalized per-voxel view weight (0 when invisible), aligned with field.voxels().
std::vector<double> view_weights(const ProbabilityField& field, const CameraView& camera, const ViewPdfOptions& options = {});

/// Throws "empty frustum" if no voxel has positive weight.
VoxelPDF view_pdf(const ProbabilityField& field, const CameraView& camera, const ViewPdfOptions& options = {});

/// Multinomial sample counts with at least one sample per voxel; sums to n. Requires n >= pdf.size().
std::vector<std::uint64_t> allocate_counts(const VoxelPDF& pdf, std::uint64_t n, std::uint64_t seed);

/// Plain multinomial draw of n samples over (unnormalized) weights.
std::vector<std::uint64_t> multinomial_counts(std::span<const double> weights, std::uint64_t n, std::uint64_t seed);

struct RejectionResult {
  std::vector<Vec3> positions;
  std::uint64_t attempts = 0;
  std::uint64_t accepted = 0;
};

/// Uniform positions in (voxel intersect frustum) by rejection; per-voxel output blocks in pdf order.
RejectionResult rejection_sample(const ProbabilityField& field, const VoxelPDF& pdf, std::span<const std::uint64_t> counts,
                                 const CameraView& camera, std::uint64_t seed, unsigned threads = 1);

/// Full view-specific sampler: pdf, counts, rejection sampling, contraction, appearance query.
PointSet sample_view(const ProbabilityField& field, const CameraView& camera, const AppearanceOracle& oracle,
                     std::uint64_t n, std::uint64_t seed, const ViewPdfOptions& options = {}, unsigned threads = 1);

/// Base-b radical inverse of i.
double radical_inverse(std::uint32_t base, std::uint64_t i);

std::vector<Vec3> halton_points(const Voxel& voxel, std::uint64_t count, std::uint64_t start_index);

/// Halton start index decorrelating voxels: 32-bit hash of the voxel key modulo 2^16.
std::uint64_t halton_start_index(VoxelKey key);

/// Per-voxel max over cameras of the unnormalized view weight.
std::vector<double> global_weights(const ProbabilityField& field, std::span<const CameraView> cameras,
                                   const ViewPdfOptions& options = {});

/// View-independent point cloud: max-weight PDF, multinomial counts, per-voxel Halton placement.
PointSet global_extract(const ProbabilityField& field, std::span<const CameraView> cameras, const AppearanceOracle& oracle,
                        std::uint64_t m, std::uint64_t seed, const ViewPdfOptions& options = {});

/// Contracts positions and queries the oracle.
PointSet make_point_set(std::vector<Vec3> positions, const AppearanceOracle& oracle);

/// FIFO of the most recent view-specific clouds.
class RingBuffer {
 public:
  explicit RingBuffer(std::size_t capacity = 4);

  struct Entry {
    std::uint64_t frame = 0;
    PointSet cloud;
  };

  /// Appends a non-empty cloud; frame tags must be strictly increasing.
  void push(PointSet cloud, std::uint64_t frame);
  /// Concatenation of all stored clouds in insertion order.
  PointSet assemble() const;

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  const std::deque<Entry>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<Entry> entries_;
};

/// Per-frame budget so that the steady state holds n_total points.
inline std::uint64_t ring_frame_budget(std::uint64_t n_total, std::size_t capacity) { return n_total / capacity; }

}  // namespace inpc
