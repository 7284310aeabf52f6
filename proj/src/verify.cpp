#include "inpc/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "inpc/appearance.hpp"
#include "inpc/directions.hpp"
#include "inpc/envmap.hpp"
#include "inpc/error.hpp"
#include "inpc/kernels.hpp"
#include "inpc/sampling.hpp"
#include "inpc/sh.hpp"
#include "inpc/tonemap.hpp"

namespace inpc {
namespace {

class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : rng_(mix64(seed)) {}
  double operator()(double a = 0.0, double b = 1.0) { return a + (b - a) * to_unit(rng_()); }
  std::uint64_t bits() { return rng_(); }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

std::uint64_t scaled(double base, double scale, std::uint64_t minimum) {
  return std::max<std::uint64_t>(minimum, static_cast<std::uint64_t>(std::llround(base * scale)));
}

// Independent front-to-back compositing of one pixel, dotted with the upstream gradient.
double pixel_objective(std::span<const Fragment> frags, std::span<const double> opacity, std::span<const Feature4> features,
                       const Feature4& background, const Feature4& upstream) {
  double t = 1.0;
  Feature4 out{};
  for (const Fragment& f : frags) {
    const double a = fragment_alpha(opacity[f.point], f.weight);
    for (int c = 0; c < 4; ++c) out[c] += t * a * features[f.point][c];
    t *= 1.0 - a;
  }
  double sum = 0;
  for (int c = 0; c < 4; ++c) sum += upstream[c] * (out[c] + t * background[c]);
  return sum;
}

double min_pairwise_distance(const std::vector<Vec3>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::min(best, norm(pts[i] - pts[j]));
  return best;
}

}  // namespace

void SuiteReport::add(std::string name, bool ok, std::string detail) {
  checks.push_back({std::move(name), ok, std::move(detail)});
}

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string SuiteReport::to_text() const {
  std::ostringstream out;
  for (const CheckResult& c : checks) out << (c.passed ? "PASS " : "FAIL ") << suite << '.' << c.name << ": " << c.detail << '\n';
  out << (passed() ? "PASS " : "FAIL ") << suite << '\n';
  return out.str();
}

nlohmann::json SuiteReport::to_json() const {
  nlohmann::json j = {{"suite", suite}, {"passed", passed()}, {"checks", nlohmann::json::array()}};
  for (const CheckResult& c : checks) j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return j;
}

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

void GradcheckStats::record(double analytic, double numeric, double floor, const std::string& what) {
  ++checked;
  const double e = relative_error(analytic, numeric, floor);
  if (!(e <= max_rel_error)) {
    max_rel_error = std::isnan(e) ? std::numeric_limits<double>::infinity() : e;
    worst = what + " (analytic " + sci(analytic) + ", numeric " + sci(numeric) + ")";
  }
}

RandomScene make_random_scene(std::uint64_t seed, const RandomSceneOptions& o) {
  if (o.width < 1 || o.height < 1) fail("make_random_scene: empty image");
  Uniform u(seed);
  RandomScene s;
  CameraView& cam = s.camera;
  cam.width = o.width;
  cam.height = o.height;
  cam.fx = u(0.8, 1.4) * o.width;
  cam.fy = cam.fx * u(0.9, 1.1);
  cam.cx = 0.5 * (o.width - 1) + u(-2, 2);
  cam.cy = 0.5 * (o.height - 1) + u(-2, 2);
  cam.z_near = 0.1;
  if (o.distortion) cam.distortion = RadialDistortion{u(-0.05, 0.05), u(-0.01, 0.01)};
  const double azimuth = u(0, 2 * std::numbers::pi), elevation = u(-0.6, 0.6);
  const Vec3 eye = Vec3{std::cos(elevation) * std::sin(azimuth), std::sin(elevation), std::cos(elevation) * std::cos(azimuth)} * 4.0;
  cam.world_to_camera = RigidTransform::look_at(eye, Vec3{u(-0.2, 0.2), u(-0.2, 0.2), u(-0.2, 0.2)}, Vec3{0, 1, 0});
  cam.validate();

  PointSet& p = s.points;
  p.reserve(o.points);
  const Vec3 forward = normalize(Vec3{0, 0, 0} - eye);
  for (std::size_t i = 0; i < o.points; ++i) {
    Vec3 pos;
    const double pick = u();
    if (i > 0 && pick < o.duplicate_fraction) {
      pos = p.positions[u.bits() % i];
    } else if (pick < o.duplicate_fraction + o.culled_fraction) {
      pos = u() < 0.5 ? eye - forward * u(0.1, 2.0) : eye + forward * u(0.0, 0.09);
    } else {
      do {
        pos = {u(-1, 1), u(-1, 1), u(-1, 1)};
      } while (dot(pos, pos) > 1.0);
      pos = pos * 1.8;
    }
    p.positions.push_back(pos);
    p.opacities.push_back(u() < o.zero_opacity_fraction ? 0.0 : u(0.0, o.max_opacity));
    ShBlock sh{};
    for (int c = 0; c < kFeatureChannels; ++c) {
      sh[c * kShCoeffsPerChannel] = u(0.2, 1.0) / kShC0;
      for (int k = 1; k < kShCoeffsPerChannel; ++k) sh[c * kShCoeffsPerChannel + k] = u(-0.3, 0.3);
    }
    p.sh.push_back(sh);
  }
  p.validate();

  const BackgroundOracle bg(mix64(seed ^ 0x626b67ull));
  const DirectionGrid grid = pixel_ray_directions(cam);
  s.background = background_image(world_ray_directions(cam, grid), bg);
  return s;
}

GradcheckStats gradcheck_blend(const RandomScene& scene, SplatMode mode, std::uint64_t seed, std::size_t max_points,
                               const BlendOptions& options) {
  const CameraView& cam = scene.camera;
  const PointSet& pts = scene.points;
  RenderOptions ro;
  ro.splat = mode;
  ro.blend = options;
  const PreparedScene prepared = prepare_scene(pts, cam, ro);
  const PixelFragments lists =
      group_by_pixel(sort_single64(gen_fragments(prepared.splats), cam.width, cam.height).fragments, cam.width, cam.height);

  Uniform u(seed);
  std::vector<Feature4> upstream(cam.pixel_count());
  for (Feature4& g : upstream)
    for (double& v : g) v = u(-1, 1);

  const GradientBuffers grads = blend_backward(lists, BlendInputs{pts.opacities, prepared.features}, prepared.view_dirs,
                                               scene.background, upstream, options);

  std::vector<std::vector<std::uint32_t>> footprint(pts.size());
  for (const Fragment& f : lists.fragments) footprint[f.point].push_back(f.pixel);

  std::vector<std::uint32_t> zero, others;
  for (std::uint32_t i = 0; i < pts.size(); ++i) {
    if (footprint[i].empty()) continue;
    (pts.opacities[i] == 0.0 ? zero : others).push_back(i);
  }
  std::shuffle(others.begin(), others.end(), u.engine());
  std::vector<std::uint32_t> chosen = zero;
  for (std::size_t k = 0; k < others.size() && chosen.size() < max_points; ++k) chosen.push_back(others[k]);

  std::vector<double> opacity(pts.opacities);
  std::vector<Feature4> features(prepared.features);
  auto local = [&](std::uint32_t i) {
    double sum = 0;
    for (std::uint32_t px : footprint[i])
      sum += pixel_objective(lists.pixel(px), opacity, features, scene.background[px], upstream[px]);
    return sum;
  };

  constexpr double h = 1e-3, floor = 1e-8;
  GradcheckStats stats;
  for (std::uint32_t i : chosen) {
    const std::string tag = "point " + std::to_string(i);
    const double o0 = opacity[i];
    const double num_o = central_difference(
        [&](double x) {
          opacity[i] = x;
          return local(i);
        },
        o0, h);
    opacity[i] = o0;
    stats.record(grads.opacity[i], num_o, floor, tag + " opacity");
    if (o0 == 0.0) ++stats.zero_alpha_checked;

    const int c = static_cast<int>(u.bits() % kFeatureChannels);
    const double f0 = features[i][c];
    const double num_f = central_difference(
        [&](double x) {
          features[i][c] = x;
          return local(i);
        },
        f0, h);
    features[i][c] = f0;
    stats.record(grads.features[i][c], num_f, floor, tag + " feature " + std::to_string(c));

    const int k = static_cast<int>(u.bits() % kShBlockSize);
    ShBlock sh = pts.sh[i];
    const Feature4 saved = features[i];
    const double num_sh = central_difference(
        [&](double x) {
          sh[k] = x;
          features[i] = eval_sh_degree2(sh, prepared.view_dirs[i]);
          return local(i);
        },
        pts.sh[i][k], h);
    features[i] = saved;
    stats.record(grads.sh[i][k], num_sh, floor, tag + " sh " + std::to_string(k));
  }
  return stats;
}

GradcheckStats gradcheck_cauchy(std::uint64_t seed, std::size_t count) {
  Uniform u(seed);
  GradcheckStats stats;
  for (int trial = 0; trial < 4; ++trial) {
    const kernels::CauchyOptions opt{u(0.5, 3.0)};
    std::vector<double> x(count);
    for (double& v : x) v = u(-5, 5) * opt.scale;
    const kernels::LossResult full = kernels::cauchy_loss(x, opt);
    for (std::size_t i = 0; i < count; ++i) {
      const double h = 1e-3 * std::max(1.0, std::abs(x[i]));
      const double num = central_difference(
          [&](double v) {
            const double one[1] = {v};
            return kernels::cauchy_loss(one, opt).loss;
          },
          x[i], h);
      stats.record(full.gradient[i] * static_cast<double>(count), num, 1e-3, "residual " + std::to_string(i));
    }
  }
  return stats;
}

GradcheckStats gradcheck_weight_decay(std::uint64_t seed, std::size_t count) {
  Uniform u(seed);
  GradcheckStats stats;
  const double lambda = u(1e-3, 1.0);
  std::vector<double> w(count), g(count, 0.0);
  for (double& v : w) v = u(-3, 3);
  kernels::add_weight_decay_grad(w, g, lambda);
  const double n = static_cast<double>(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double num = central_difference([&](double v) { return lambda * v * v / n; }, w[i], 1e-3);
    stats.record(g[i], num, 1e-12, "weight " + std::to_string(i));
  }
  return stats;
}

GradcheckStats gradcheck_env_texels(std::uint64_t seed, std::size_t directions) {
  Uniform u(seed);
  EnvironmentMap map(8, 16);
  for (Feature4& t : map.texels())
    for (double& v : t) v = u();
  GradcheckStats stats;
  for (std::size_t n = 0; n < directions; ++n) {
    const Vec3 d = sphere_direction(u(), u());
    const EnvTaps taps = env_taps(map, d);
    for (int k = 0; k < 4; ++k) {
      const std::size_t t = taps.texel[k];
      double analytic = 0;
      for (int j = 0; j < 4; ++j)
        if (taps.texel[j] == t) analytic += taps.weight[j];
      const int c = static_cast<int>(u.bits() % 4);
      const double v0 = map.texels()[t][c];
      const double num = central_difference(
          [&](double v) {
            map.texels()[t][c] = v;
            return sample_env(map, d)[c];
          },
          v0, 1e-3);
      map.texels()[t][c] = v0;
      stats.record(analytic, num, 1e-12, "texel " + std::to_string(t));
    }
  }
  return stats;
}

ChiSquareResult half_clipped_voxel_uniformity(std::uint64_t samples, std::uint64_t seed, int cells, unsigned threads) {
  if (cells < 1) fail("half_clipped_voxel_uniformity: need at least one cell per axis");
  const SceneBounds bounds;
  const ProbabilityField field(1, bounds, {lattice_voxel(1, bounds, 0, 0, 0, 1.0)});
  // cx = -0.5 puts the left image edge (u = -0.5) on the plane x_c = 0 through the voxel center.
  CameraView cam;
  cam.fx = cam.fy = 100.0;
  cam.cx = -0.5;
  cam.cy = 31.5;
  cam.width = cam.height = 64;
  cam.z_near = 0.1;
  cam.world_to_camera.translation = {0, 0, 5};
  cam.validate();

  const VoxelPDF pdf = view_pdf(field, cam);
  const auto counts = allocate_counts(pdf, samples, seed);
  const RejectionResult r = rejection_sample(field, pdf, counts, cam, seed, threads);

  ChiSquareResult out;
  out.samples = r.positions.size();
  std::vector<std::uint64_t> bins(static_cast<std::size_t>(cells) * cells * cells, 0);
  for (const Vec3& p : r.positions) {
    if (p.x < 0.0 || p.x > 1.0 || std::abs(p.y) > 1.0 || std::abs(p.z) > 1.0) {
      ++out.misplaced;
      continue;
    }
    const int ix = std::min(cells - 1, static_cast<int>(p.x * cells));
    const int iy = std::min(cells - 1, static_cast<int>((p.y + 1.0) * 0.5 * cells));
    const int iz = std::min(cells - 1, static_cast<int>((p.z + 1.0) * 0.5 * cells));
    ++bins[(static_cast<std::size_t>(iz) * cells + iy) * cells + ix];
  }
  const double expected = static_cast<double>(out.samples - out.misplaced) / static_cast<double>(bins.size());
  for (std::uint64_t b : bins) out.statistic += (b - expected) * (b - expected) / expected;
  out.dof = static_cast<int>(bins.size()) - 1;
  const boost::math::chi_squared dist(out.dof);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

AllocationCheck check_allocate_counts(std::size_t pdfs, std::uint64_t seed) {
  Uniform u(seed);
  AllocationCheck out;
  for (std::size_t trial = 0; trial < pdfs; ++trial) {
    const std::size_t k = 1 + u.bits() % 200;
    VoxelPDF pdf;
    pdf.weights.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      pdf.voxels.push_back(static_cast<std::uint32_t>(i));
      pdf.weights[i] = std::pow(10.0, u(-6, 0));
      pdf.normalization += pdf.weights[i];
    }
    for (double& w : pdf.weights) w /= pdf.normalization;
    const std::uint64_t n = k + u.bits() % (10 * k + 1000);
    const auto counts = allocate_counts(pdf, n, u.bits());
    std::uint64_t sum = 0;
    for (std::uint64_t c : counts) sum += c;
    ++out.pdfs;
    if (sum != n || counts.size() != k) ++out.sum_failures;
    if (std::any_of(counts.begin(), counts.end(), [](std::uint64_t c) { return c == 0; })) ++out.min_one_failures;
  }
  return out;
}

SpreadComparison halton_vs_uniform_spread(std::uint64_t seed, std::size_t count) {
  const Voxel unit = lattice_voxel(1, SceneBounds{{0, 0, 0}, {1, 1, 1}}, 0, 0, 0, 1.0);
  SpreadComparison out;
  out.halton = min_pairwise_distance(halton_points(unit, count, halton_start_index(VoxelKey{mix64(seed)})));
  Uniform u(seed);
  std::vector<Vec3> random(count);
  for (Vec3& p : random) p = {u(), u(), u()};
  out.uniform = min_pairwise_distance(random);
  return out;
}

RoundTripResult tonemap_round_trip(std::uint64_t triples, std::uint64_t seed) {
  Uniform u(seed);
  RoundTripResult out;
  std::vector<double> raw;
  for (std::uint64_t i = 0; i < triples; ++i) {
    const std::size_t k = 2 + u.bits() % 63;
    raw.assign(k, 0.0);
    for (std::size_t j = 1; j < k; ++j) raw[j] = raw[j - 1] + u(0.01, 1.0);
    const ResponseCurve curve = project_curve(raw);
    const double ev = u(-4, 4);
    const int edge = static_cast<int>(u.bits() % 64);
    const double y = edge == 0 ? 0.0 : edge == 1 ? 1.0 : u();
    const double x = (edge == 2 ? 1.0 : edge == 3 ? 0.0 : u()) * std::exp2(ev);
    out.display_error = std::max(out.display_error, std::abs(tonemap_forward(tonemap_inverse(y, ev, curve), ev, curve) - y));
    out.hdr_error = std::max(out.hdr_error, std::abs(tonemap_inverse(tonemap_forward(x, ev, curve), ev, curve) - x));
    ++out.triples;
  }
  return out;
}

SuiteReport verify_gradcheck(const VerifyOptions& o) {
  SuiteReport report{"gradcheck", {}};
  for (SplatMode mode : {SplatMode::Bilinear, SplatMode::Gaussian}) {
    RandomSceneOptions so;
    so.points = mode == SplatMode::Bilinear ? 2000 : 400;
    const RandomScene scene = make_random_scene(o.seed, so);
    const GradcheckStats s = gradcheck_blend(scene, mode, o.seed + 1, scaled(300, o.scale, 20));
    const std::string name = mode == SplatMode::Bilinear ? "blend_bilinear_64x64" : "blend_gaussian_64x64";
    report.add(name, s.max_rel_error < 1e-4 && s.zero_alpha_checked > 0,
               std::to_string(s.checked) + " partials (" + std::to_string(s.zero_alpha_checked) +
                   " zero-opacity), max rel error " + sci(s.max_rel_error) + (s.worst.empty() ? "" : " at " + s.worst));
  }
  {
    // Tile-parallel backward against the per-pixel backward.
    const RandomScene scene = make_random_scene(o.seed + 2, RandomSceneOptions{.points = 3000, .width = 96, .height = 80});
    Uniform u(o.seed + 3);
    std::vector<Feature4> upstream(scene.camera.pixel_count());
    for (Feature4& g : upstream)
      for (double& v : g) v = u(-1, 1);
    RenderOptions ro;
    ro.threads = o.threads;
    const GradientBuffers tiled = render_tiled_backward(scene.points, scene.camera, scene.background, upstream, ro);
    const PreparedScene ps = prepare_scene(scene.points, scene.camera, ro);
    const PixelFragments lists = group_by_pixel(
        sort_single64(gen_fragments(ps.splats), scene.camera.width, scene.camera.height).fragments, scene.camera.width,
        scene.camera.height);
    const GradientBuffers ref =
        blend_backward(lists, BlendInputs{scene.points.opacities, ps.features}, ps.view_dirs, scene.background, upstream);
    double worst = 0;
    for (std::size_t i = 0; i < scene.points.size(); ++i) {
      worst = std::max(worst, relative_error(tiled.opacity[i], ref.opacity[i], 1e-12));
      for (int k = 0; k < kShBlockSize; ++k) worst = std::max(worst, relative_error(tiled.sh[i][k], ref.sh[i][k], 1e-12));
    }
    report.add("tiled_backward_matches_reference", worst < 1e-9, "max rel difference " + sci(worst));
  }
  {
    // One fragment with alpha = 0 in front of the background: dF/dalpha = f - b.
    PixelFragments lists;
    lists.width = lists.height = 1;
    lists.offsets = {0, 1};
    lists.fragments = {Fragment{0, 0, 1.0, 1.0}};
    const std::vector<double> opacity{0.0};
    const std::vector<Feature4> feature{{0.8, 0.6, 0.4, 0.2}};
    const std::vector<Feature4> bg{{0.1, 0.2, 0.3, 0.4}};
    const std::vector<Vec3> dirs{{0, 0, 1}};
    double worst = 0;
    for (int c = 0; c < 4; ++c) {
      std::vector<Feature4> up(1, Feature4{});
      up[0][c] = 1.0;
      const GradientBuffers g = blend_backward(lists, BlendInputs{opacity, feature}, dirs, bg, up);
      worst = std::max(worst, std::abs(g.opacity[0] - (feature[0][c] - bg[0][c])));
    }
    report.add("zero_alpha_single_fragment", worst < 1e-15, "max |dF/do - (f - b)| " + sci(worst));
  }
  const GradcheckStats cauchy = gradcheck_cauchy(o.seed + 4);
  report.add("cauchy_loss", cauchy.max_rel_error < 1e-8,
             std::to_string(cauchy.checked) + " partials, max rel error " + sci(cauchy.max_rel_error));
  const GradcheckStats decay = gradcheck_weight_decay(o.seed + 5);
  report.add("weight_decay", decay.max_rel_error < 1e-8,
             std::to_string(decay.checked) + " partials, max rel error " + sci(decay.max_rel_error));
  const GradcheckStats env = gradcheck_env_texels(o.seed + 6);
  report.add("env_texels", env.max_rel_error < 1e-8,
             std::to_string(env.checked) + " partials, max rel error " + sci(env.max_rel_error));
  return report;
}

SuiteReport verify_sampling(const VerifyOptions& o) {
  SuiteReport report{"sampling", {}};
  const ChiSquareResult chi = half_clipped_voxel_uniformity(scaled(1e6, o.scale, 20000), o.seed, 8, o.threads);
  report.add("half_clipped_uniformity", chi.p_value > 0.01 && chi.misplaced == 0,
             std::to_string(chi.samples) + " samples, chi2 " + sci(chi.statistic) + " (dof " + std::to_string(chi.dof) +
                 "), p " + sci(chi.p_value) + ", misplaced " + std::to_string(chi.misplaced));
  const AllocationCheck alloc = check_allocate_counts(scaled(1000, o.scale, 50), o.seed + 1);
  report.add("allocate_counts", alloc.sum_failures == 0 && alloc.min_one_failures == 0,
             std::to_string(alloc.pdfs) + " pdfs, sum failures " + std::to_string(alloc.sum_failures) +
                 ", min-one failures " + std::to_string(alloc.min_one_failures));
  int wins = 0;
  double halton_mean = 0, uniform_mean = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const SpreadComparison c = halton_vs_uniform_spread(o.seed * 1000 + s, 4096);
    wins += c.halton > c.uniform;
    halton_mean += c.halton / 10;
    uniform_mean += c.uniform / 10;
  }
  report.add("halton_min_distance", halton_mean > uniform_mean,
             "4096 points, mean min distance halton " + sci(halton_mean) + " vs uniform " + sci(uniform_mean) + " (" +
                 std::to_string(wins) + "/10 seeds won)");
  return report;
}

SuiteReport verify_tonemap(const VerifyOptions& o) {
  SuiteReport report{"tonemap", {}};
  const RoundTripResult rt = tonemap_round_trip(scaled(1e6, o.scale, 10000), o.seed);
  report.add("forward_of_inverse", rt.display_error <= 1e-12,
             std::to_string(rt.triples) + " triples, max abs error " + sci(rt.display_error));
  report.add("inverse_of_forward", rt.hdr_error <= 1e-12,
             std::to_string(rt.triples) + " triples, max abs error " + sci(rt.hdr_error));
  {
    const std::vector<double> flat(25, 0.3);
    const ResponseCurve c = project_curve(flat);
    bool ok = true;
    for (int k = 1; k < 24; ++k) ok = ok && std::abs((c.values()[k] - c.values()[k - 1]) - (c.values()[k + 1] - c.values()[k])) < 1e-9;
    report.add("project_constant_input", ok, "constant raw values give evenly spaced knots");
  }
  {
    std::vector<double> bad(25);
    for (int k = 0; k < 25; ++k) bad[k] = 0.9 * k / 24.0;
    bool rejected = false;
    try {
      (void)ResponseCurve::from_values(bad);
    } catch (const Error&) {
      rejected = true;
    }
    report.add("reject_open_endpoint", rejected, "curve ending at 0.9 is rejected");
  }
  {
    const ResponseCurve id;
    double worst = 0;
    for (int i = 0; i <= 1000; ++i) {
      const double y = i / 1000.0;
      worst = std::max(worst, std::abs(tonemap_inverse(y, 1.5, id) - y * std::exp2(1.5)));
    }
    report.add("identity_inverse", worst < 1e-12, "max |inverse(y) - y 2^ev| " + sci(worst));
  }
  return report;
}

SuiteReport verify_envmap(const VerifyOptions& o) {
  SuiteReport report{"envmap", {}};
  DistillConfig cfg;
  cfg.iterations = static_cast<int>(scaled(1000, o.scale, 20));
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  const BackgroundOracle oracle(o.seed);
  const auto t0 = std::chrono::steady_clock::now();
  const DistillResult fit = distill_env(oracle, cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double psnr = psnr_from_mse(env_mse(fit.map, oracle, 1ull << 18, mix64(o.seed + 77)));
  const bool full = o.scale >= 1.0;
  report.add("band_limited_psnr", !full || psnr >= 40.0,
             std::to_string(cfg.height) + "x" + std::to_string(cfg.width) + ", " + std::to_string(cfg.iterations) +
                 " iterations, held-out PSNR " + sci(psnr) + " dB" + (full ? "" : " (reduced budget, not gated)"));
  report.add("distill_runtime", seconds < 120.0, sci(seconds) + " s");

  DistillConfig flat = cfg;
  flat.iterations = static_cast<int>(scaled(200, o.scale, 10));
  const DirectionalOracle constant = BackgroundOracle::constant(0.5);
  const double mse = env_mse(distill_env(constant, flat).map, constant, 1ull << 16, o.seed + 5);
  report.add("constant_oracle", mse < 1e-10, "MSE " + sci(mse));

  const GradcheckStats g = gradcheck_env_texels(o.seed + 9);
  report.add("texel_gradients", g.max_rel_error < 1e-8, "max rel error " + sci(g.max_rel_error));

  EnvironmentMap map(16, 32);
  Uniform u(o.seed);
  for (Feature4& t : map.texels())
    for (double& v : t) v = u();
  double seam = 0;
  for (int i = 0; i < 64; ++i) {
    const double dy = u(-0.9, 0.9), r = std::sqrt(1 - dy * dy), eps = 1e-9;
    const Feature4 a = sample_env(map, {r * std::sin(std::numbers::pi - eps), dy, r * std::cos(std::numbers::pi - eps)});
    const Feature4 b = sample_env(map, {r * std::sin(-std::numbers::pi + eps), dy, r * std::cos(-std::numbers::pi + eps)});
    for (int c = 0; c < 4; ++c) seam = std::max(seam, std::abs(a[c] - b[c]));
  }
  report.add("seam_continuity", seam < 1e-6, "max jump across the seam " + sci(seam));
  return report;
}

SuiteReport run_verify_suite(const std::string& suite, const VerifyOptions& options) {
  if (suite == "gradcheck") return verify_gradcheck(options);
  if (suite == "sampling") return verify_sampling(options);
  if (suite == "tonemap") return verify_tonemap(options);
  if (suite == "envmap") return verify_envmap(options);
  throw Error(ErrorKind::Usage, "unknown verify suite '" + suite + "' (expected gradcheck, sampling, tonemap or envmap)");
}

}  // namespace inpc
