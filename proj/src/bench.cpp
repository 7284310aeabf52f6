#include "inpc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>

#include "inpc/appearance.hpp"
#include "inpc/error.hpp"

namespace inpc {
namespace {

PipelineCost cost_of(const SortStats& s) {
  return {s.key_count, s.key_bits, s.passes, s.pass_key_product(), s.key_bytes};
}

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

SplatList synthetic_splat_load(int width, int height, std::uint64_t n, std::uint64_t seed) {
  if (width < 2 || height < 2) fail("synthetic_splat_load: image must be at least 2x2");
  std::mt19937_64 rng(mix64(seed));
  ProjectedPoints projected;
  projected.index.resize(n);
  projected.pixel.resize(n);
  projected.depth.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    projected.index[i] = static_cast<std::uint32_t>(i);
    projected.pixel[i] = {to_unit(rng()) * (width - 1), to_unit(rng()) * (height - 1)};
    projected.depth[i] = 0.5 + 49.5 * to_unit(rng());
  }
  return make_bilinear_splats(projected, width, height);
}

double tiles_per_splat_monte_carlo(std::uint64_t placements, std::uint64_t seed, int width, int height) {
  if (placements == 0) fail("tiles_per_splat_monte_carlo: need at least one placement");
  const std::uint64_t chunk = 1ull << 18;
  std::uint64_t copies = 0, done = 0;
  for (std::uint64_t c = 0; done < placements; ++c) {
    const std::uint64_t n = std::min(chunk, placements - done);
    const TileBins bins = sort_two_stage(synthetic_splat_load(width, height, n, mix64(seed + c)));
    copies += bins.stats.tile_sort.key_count;
    done += n;
  }
  return static_cast<double>(copies) / static_cast<double>(placements);
}

double SortCostReport::baseline_cost_per_point() const {
  return points ? static_cast<double>(baseline.pass_key_product) / points : 0.0;
}

double SortCostReport::two_stage_cost_per_point() const {
  return points ? static_cast<double>(depth_stage.pass_key_product + tile_stage.pass_key_product) / points : 0.0;
}

double SortCostReport::pass_cost_ratio() const {
  const double two = two_stage_cost_per_point();
  return two > 0 ? baseline_cost_per_point() / two : 0.0;
}

double SortCostReport::per_point_memory_ratio(double tps) { return (4.0 + 2.0 * tps) / 8.0; }

double SortCostReport::measured_key_bytes_ratio() const {
  return baseline.key_bytes ? static_cast<double>(depth_stage.key_bytes + tile_stage.key_bytes) / baseline.key_bytes : 0.0;
}

SortCostReport measure_sort_costs(const SplatList& load) {
  SortCostReport r;
  r.width = load.width;
  r.height = load.height;
  r.points = load.splats.size();
  const auto fragments = gen_fragments(load);
  r.fragments = fragments.size();
  r.baseline = cost_of(sort_single64(fragments, load.width, load.height).stats);
  const TileBins bins = sort_two_stage(load);
  r.depth_stage = cost_of(bins.stats.depth_sort);
  r.tile_stage = cost_of(bins.stats.tile_sort);
  r.tiles_per_splat = r.points ? static_cast<double>(r.tile_stage.keys) / r.points : 0.0;
  return r;
}

std::string sort_costs_csv(const std::vector<SortCostReport>& reports) {
  std::ostringstream out;
  out << "width,height,points,fragments,baseline_key_bits,baseline_passes,baseline_pass_keys,baseline_key_bytes,"
         "depth_passes,depth_pass_keys,depth_key_bytes,tile_key_bits,tile_passes,tile_pass_keys,tile_key_bytes,"
         "tiles_per_splat,baseline_per_point,two_stage_per_point,pass_cost_ratio,memory_ratio_per_point,"
         "memory_saving_per_point,memory_ratio_nominal,memory_saving_nominal,measured_key_bytes_ratio\n";
  for (const SortCostReport& r : reports) {
    const double mem = SortCostReport::per_point_memory_ratio(r.tiles_per_splat);
    const double nominal = SortCostReport::per_point_memory_ratio(kNominalTilesPerSplat);
    out << r.width << ',' << r.height << ',' << r.points << ',' << r.fragments << ',' << r.baseline.key_bits << ','
        << r.baseline.passes << ',' << r.baseline.pass_key_product << ',' << r.baseline.key_bytes << ','
        << r.depth_stage.passes << ',' << r.depth_stage.pass_key_product << ',' << r.depth_stage.key_bytes << ','
        << r.tile_stage.key_bits << ',' << r.tile_stage.passes << ',' << r.tile_stage.pass_key_product << ','
        << r.tile_stage.key_bytes << ',' << fmt(r.tiles_per_splat, 6) << ',' << fmt(r.baseline_cost_per_point(), 6) << ','
        << fmt(r.two_stage_cost_per_point(), 6) << ',' << fmt(r.pass_cost_ratio(), 6) << ',' << fmt(mem, 6) << ','
        << fmt(1.0 - mem, 6) << ',' << fmt(nominal, 6) << ',' << fmt(1.0 - nominal, 6) << ','
        << fmt(r.measured_key_bytes_ratio(), 6) << '\n';
  }
  return out.str();
}

std::string sort_costs_markdown(const std::vector<SortCostReport>& reports) {
  std::ostringstream out;
  out << "| image | points | fragments | tiles/splat | single 64-bit sort | two-stage sort | cost ratio | key memory "
         "(per point) | key memory (nominal 1.27 tiles) |\n";
  out << "|---|---|---|---|---|---|---|---|---|\n";
  for (const SortCostReport& r : reports) {
    const double mem = SortCostReport::per_point_memory_ratio(r.tiles_per_splat);
    const double nominal = SortCostReport::per_point_memory_ratio(kNominalTilesPerSplat);
    out << "| " << r.width << "x" << r.height << " | " << r.points << " | " << r.fragments << " | "
        << fmt(r.tiles_per_splat, 4) << " | " << fmt(r.baseline_cost_per_point(), 2) << "n ("
        << r.baseline.passes << " passes x " << r.baseline.keys << " keys) | " << fmt(r.two_stage_cost_per_point(), 2)
        << "n (" << r.depth_stage.passes << " x " << r.depth_stage.keys << " + " << r.tile_stage.passes << " x "
        << r.tile_stage.keys << ") | " << fmt(r.pass_cost_ratio(), 3) << " | " << fmt(mem * 8.0, 3) << " / 8 bytes, "
        << fmt(100.0 * (1.0 - mem), 2) << "% saved | " << fmt(nominal * 8.0, 2) << " / 8 bytes, "
        << fmt(100.0 * (1.0 - nominal), 2) << "% saved |\n";
  }
  return out.str();
}

double median_seconds(const std::function<void()>& fn, int runs) {
  if (runs < 1) fail("median_seconds: need at least one run");
  fn();
  std::vector<double> times;
  for (int i = 0; i < runs; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(times.begin(), times.end());
  return runs % 2 ? times[runs / 2] : 0.5 * (times[runs / 2 - 1] + times[runs / 2]);
}

}  // namespace inpc
