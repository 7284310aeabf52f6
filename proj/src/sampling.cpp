#include "inpc/sampling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <queue>
#include <random>
#include <string>

#include "inpc/error.hpp"
#include "inpc/kernels.hpp"
#include "inpc/parallel.hpp"

namespace inpc {
namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) { return std::mt19937_64(mix64(seed ^ mix64(stream))); }

double uniform(std::mt19937_64& rng) { return to_unit(rng()); }

}  // namespace

double visible_fraction(const Voxel& voxel, const CameraView& camera, int lattice) {
  if (lattice < 1) fail("visibility lattice must be >= 1");
  const Vec3 origin = voxel.origin();
  int inside = 0;
  for (int i = 0; i < lattice; ++i)
    for (int j = 0; j < lattice; ++j)
      for (int k = 0; k < lattice; ++k) {
        const Vec3 p = origin + Vec3{(i + 0.5) / lattice, (j + 0.5) / lattice, (k + 0.5) / lattice} * voxel.size;
        inside += camera.in_frustum(p) ? 1 : 0;
      }
  return static_cast<double>(inside) / (lattice * lattice * lattice);
}

std::vector<double> view_weights(const ProbabilityField& field, const CameraView& camera, const ViewPdfOptions& options) {
  camera.validate();
  const Vec3 eye = camera.origin();
  std::vector<double> out(field.size(), 0.0);
  const auto voxels = field.voxels();
  for (std::size_t v = 0; v < voxels.size(); ++v) {
    if (voxels[v].weight <= 0) continue;
    const double vis = visible_fraction(voxels[v], camera, options.visibility_lattice);
    if (vis <= 0) continue;
    const double dist = std::max(norm(voxels[v].center - eye), camera.z_near);
    out[v] = voxels[v].weight * vis * std::pow(voxels[v].size / dist, options.distance_exponent);
  }
  return out;
}

VoxelPDF view_pdf(const ProbabilityField& field, const CameraView& camera, const ViewPdfOptions& options) {
  if (field.empty()) fail("view_pdf: empty probability field");
  const auto raw = view_weights(field, camera, options);
  VoxelPDF pdf;
  for (std::size_t v = 0; v < raw.size(); ++v) {
    if (raw[v] > 0) {
      pdf.voxels.push_back(static_cast<std::uint32_t>(v));
      pdf.weights.push_back(raw[v]);
      pdf.normalization += raw[v];
    }
  }
  if (pdf.voxels.empty()) fail("empty frustum");
  for (double& w : pdf.weights) w /= pdf.normalization;
  return pdf;
}

std::vector<std::uint64_t> multinomial_counts(std::span<const double> weights, std::uint64_t n, std::uint64_t seed) {
  std::vector<double> cdf(weights.size());
  double total = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0)) fail("multinomial_counts: negative weight");
    total += weights[i];
    cdf[i] = total;
  }
  std::vector<std::uint64_t> counts(weights.size(), 0);
  if (n == 0) return counts;
  if (!(total > 0)) fail("multinomial_counts: all weights are zero");
  auto rng = make_rng(seed, 0x6d756c74ull);
  for (std::uint64_t s = 0; s < n; ++s) {
    const double target = uniform(rng) * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    // Guard the rounding edge at the top and never land on a zero-weight bin.
    std::size_t idx = it == cdf.end() ? cdf.size() - 1 : static_cast<std::size_t>(it - cdf.begin());
    while (weights[idx] == 0 && idx > 0) --idx;
    ++counts[idx];
  }
  return counts;
}

std::vector<std::uint64_t> allocate_counts(const VoxelPDF& pdf, std::uint64_t n, std::uint64_t seed) {
  if (n < pdf.size())
    fail("allocate_counts: " + std::to_string(n) + " samples cannot cover " + std::to_string(pdf.size()) + " voxels");
  auto counts = multinomial_counts(pdf.weights, n, seed);
  // Raise every positive-weight voxel to one sample, taking from the largest counts (lower index on ties).
  auto cmp = [&](std::size_t a, std::size_t b) { return counts[a] != counts[b] ? counts[a] < counts[b] : a > b; };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)> donors(cmp);
  std::vector<std::size_t> starved;
  for (std::size_t v = 0; v < counts.size(); ++v) {
    if (counts[v] > 0) donors.push(v);
    else if (pdf.weights[v] > 0) starved.push_back(v);
  }
  for (std::size_t v : starved) {
    const std::size_t d = donors.top();
    donors.pop();
    --counts[d];
    ++counts[v];
    if (counts[d] > 0) donors.push(d);
  }
  return counts;
}

RejectionResult rejection_sample(const ProbabilityField& field, const VoxelPDF& pdf, std::span<const std::uint64_t> counts,
                                 const CameraView& camera, std::uint64_t seed, unsigned threads) {
  if (counts.size() != pdf.size()) fail("rejection_sample: counts do not match the pdf");
  std::vector<std::uint64_t> offsets(counts.size() + 1, 0);
  for (std::size_t i = 0; i < counts.size(); ++i) offsets[i + 1] = offsets[i] + counts[i];
  RejectionResult out;
  out.positions.resize(offsets.back());
  std::atomic<std::uint64_t> accepted{0};
  std::vector<std::uint64_t> attempts(counts.size(), 0);
  std::vector<char> degenerate(counts.size(), 0);
  const auto voxels = field.voxels();
  parallel_for(counts.size(), threads, [&](std::size_t i) {
    if (counts[i] == 0) return;
    const Voxel& voxel = voxels[pdf.voxels[i]];
    const Vec3 origin = voxel.origin();
    auto rng = make_rng(seed, voxel.key.value);
    const std::uint64_t cap = 10000 * counts[i];
    std::uint64_t got = 0, tries = 0;
    while (got < counts[i]) {
      if (tries >= cap) {
        degenerate[i] = 1;
        break;
      }
      ++tries;
      const double a = uniform(rng), b = uniform(rng), c = uniform(rng);
      const Vec3 p = origin + Vec3{a, b, c} * voxel.size;
      if (!camera.in_frustum(p)) continue;
      out.positions[offsets[i] + got++] = p;
    }
    accepted.fetch_add(got, std::memory_order_relaxed);
    attempts[i] = tries;
  });
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (degenerate[i]) fail("degenerate visibility (voxel " + std::to_string(pdf.voxels[i]) + ")");
    out.attempts += attempts[i];
  }
  out.accepted = accepted.load();
  return out;
}

PointSet make_point_set(std::vector<Vec3> positions, const AppearanceOracle& oracle) {
  std::vector<Vec3> contracted(positions.size());
  kernels::contract_batch(positions, contracted);
  AppearanceBatch appearance = query_appearance(oracle, contracted);
  PointSet out;
  out.positions = std::move(positions);
  out.opacities = std::move(appearance.opacities);
  out.sh = std::move(appearance.sh);
  return out;
}

PointSet sample_view(const ProbabilityField& field, const CameraView& camera, const AppearanceOracle& oracle,
                     std::uint64_t n, std::uint64_t seed, const ViewPdfOptions& options, unsigned threads) {
  if (n == 0) return {};
  const VoxelPDF pdf = view_pdf(field, camera, options);
  const auto counts = allocate_counts(pdf, n, seed);
  RejectionResult sampled = rejection_sample(field, pdf, counts, camera, seed, threads);
  return make_point_set(std::move(sampled.positions), oracle);
}

double radical_inverse(std::uint32_t base, std::uint64_t i) {
  if (base < 2) fail("radical_inverse: base must be >= 2");
  const double inv_base = 1.0 / base;
  double inv = inv_base, result = 0;
  while (i > 0) {
    result += static_cast<double>(i % base) * inv;
    i /= base;
    inv *= inv_base;
  }
  return result;
}

std::vector<Vec3> halton_points(const Voxel& voxel, std::uint64_t count, std::uint64_t start_index) {
  std::vector<Vec3> out;
  out.reserve(count);
  const Vec3 origin = voxel.origin();
  for (std::uint64_t i = start_index; i < start_index + count; ++i)
    out.push_back(origin + Vec3{radical_inverse(2, i), radical_inverse(3, i), radical_inverse(5, i)} * voxel.size);
  return out;
}

std::uint64_t halton_start_index(VoxelKey key) {
  return static_cast<std::uint32_t>(mix64(key.value)) % (1u << 16);
}

std::vector<double> global_weights(const ProbabilityField& field, std::span<const CameraView> cameras,
                                   const ViewPdfOptions& options) {
  std::vector<double> g(field.size(), 0.0);
  for (const CameraView& cam : cameras) {
    const auto w = view_weights(field, cam, options);
    for (std::size_t v = 0; v < g.size(); ++v) g[v] = std::max(g[v], w[v]);
  }
  return g;
}

PointSet global_extract(const ProbabilityField& field, std::span<const CameraView> cameras, const AppearanceOracle& oracle,
                        std::uint64_t m, std::uint64_t seed, const ViewPdfOptions& options) {
  if (cameras.empty()) fail("global_extract: at least one camera is required");
  if (m == 0) fail("global_extract: point budget must be >= 1");
  const auto g = global_weights(field, cameras, options);
  if (std::none_of(g.begin(), g.end(), [](double w) { return w > 0; })) fail("global_extract: no voxel is visible from any camera");
  const auto counts = multinomial_counts(g, m, seed);
  std::vector<Vec3> positions;
  positions.reserve(m);
  const auto voxels = field.voxels();
  for (std::size_t v = 0; v < counts.size(); ++v) {
    if (counts[v] == 0) continue;
    const auto pts = halton_points(voxels[v], counts[v], halton_start_index(voxels[v].key));
    positions.insert(positions.end(), pts.begin(), pts.end());
  }
  return make_point_set(std::move(positions), oracle);
}

RingBuffer::RingBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) fail("ring buffer capacity must be >= 1");
}

void RingBuffer::push(PointSet cloud, std::uint64_t frame) {
  if (cloud.empty()) fail("ring buffer: cannot push an empty cloud");
  if (!entries_.empty() && frame <= entries_.back().frame) fail("ring buffer: frame tags must increase");
  entries_.push_back({frame, std::move(cloud)});
  while (entries_.size() > capacity_) entries_.pop_front();
}

PointSet RingBuffer::assemble() const {
  if (entries_.empty()) fail("ring buffer: nothing to assemble");
  PointSet out;
  std::size_t total = 0;
  for (const auto& e : entries_) total += e.cloud.size();
  out.reserve(total);
  for (const auto& e : entries_) out.append(e.cloud);
  return out;
}

}  // namespace inpc
