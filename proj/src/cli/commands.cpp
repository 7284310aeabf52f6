#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <thread>

#include "inpc/bench.hpp"
#include "inpc/cli.hpp"
#include "inpc/envmap.hpp"
#include "inpc/error.hpp"
#include "inpc/io.hpp"
#include "inpc/kernels.hpp"
#include "inpc/parallel.hpp"
#include "inpc/pipeline.hpp"
#include "inpc/scenegen.hpp"
#include "inpc/tonemap.hpp"
#include "inpc/verify.hpp"

#ifndef INPC_GIT_DESCRIBE
#define INPC_GIT_DESCRIBE "unknown"
#endif

namespace inpc::cli {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// FNV-1a over the float32 dump of an image, matching what is written to disk.
std::uint64_t image_hash(const FeatureImage& img) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&](float f) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) {
      h ^= (bits >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  };
  for (const Feature4& f : img.features)
    for (double v : f) feed(static_cast<float>(v));
  for (double t : img.transmittance) feed(static_cast<float>(t));
  return h;
}

void write_manifest(const std::filesystem::path& path, const std::string& command, const nlohmann::json& config,
                    const nlohmann::json& seeds, const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json m = {{"command", command},
                      {"config", config},
                      {"git_describe", git_describe()},
                      {"seeds", seeds},
                      {"simd", kernels::to_string(kernels::active_simd_level())}};
  for (const auto& [k, v] : extra.items()) m[k] = v;
  write_text(path, m.dump(2) + "\n");
}

std::filesystem::path frame_stem(const std::filesystem::path& dir, int frame) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04d", frame);
  return dir / buf;
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const std::string& suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

}  // namespace

std::string git_describe() { return INPC_GIT_DESCRIBE; }

nlohmann::json to_json(const GenSceneConfig& c) {
  return {{"kind", c.kind},     {"seed", c.seed},   {"resolution", c.resolution}, {"cameras", c.cameras},
          {"width", c.width},   {"height", c.height}, {"out", c.out.string()}};
}

nlohmann::json to_json(const RenderConfig& c) {
  return {{"scene", c.scene.string()}, {"out", c.out.string()}, {"sampler", c.sampler}, {"points", c.points},
          {"buffer", c.buffer},        {"splat", c.splat},      {"sort", c.sort},       {"seed", c.seed},
          {"frames", c.frames},        {"camera", c.camera},    {"envmap", c.envmap},   {"preview", c.preview},
          {"threads", c.threads}};
}

nlohmann::json to_json(const BenchConfig& c) {
  return {{"out", c.out.string()}, {"width", c.width},     {"height", c.height},
          {"points", c.points},    {"placements", c.placements}, {"seed", c.seed},
          {"runs", c.runs},        {"scene", c.scene},     {"render_points", c.render_points},
          {"dump_keys", c.dump_keys}, {"threads", c.threads}};
}

nlohmann::json to_json(const DistillConfigCli& c) {
  return {{"out", c.out.string()}, {"size", c.size},           {"iters", c.iters},   {"batch", c.batch},
          {"lr_start", c.lr_start}, {"lr_end", c.lr_end},      {"seed", c.seed},     {"optimizer", c.optimizer},
          {"scene", c.scene},      {"full_scale", c.full_scale}, {"threads", c.threads}};
}

nlohmann::json to_json(const TonemapConfig& c) {
  nlohmann::json j = {{"mode", c.mode}, {"in", c.in.string()}, {"out", c.out.string()}, {"curve", c.curve}};
  j["ev"] = c.ev ? nlohmann::json(*c.ev) : nlohmann::json(nullptr);
  return j;
}

int cmd_genscene(const GenSceneConfig& c) {
  CameraRig rig;
  rig.count = c.cameras;
  rig.width = c.width;
  rig.height = c.height;
  const Scene scene = generate_scene(parse_scene_kind(c.kind), c.seed, c.resolution, rig);
  write_scene(c.out, scene);
  write_manifest(with_suffix(c.out, ".manifest.json"), "genscene", to_json(c),
                 {{"scene", scene.seed}, {"oracle", scene.oracle_seed}, {"background", scene.background_seed}},
                 {{"voxels", scene.field.size()}});
  std::cout << "wrote " << c.out.string() << ": " << scene.kind << ", " << scene.field.size() << " voxels at "
            << scene.field.resolution() << "^3, " << scene.cameras.size() << " cameras\n";
  return kOk;
}

int cmd_render(const RenderConfig& c) {
  const Scene scene = read_scene(c.scene);
  if (scene.cameras.empty()) fail("scene has no cameras");
  SamplerConfig sc;
  sc.mode = parse_sampler_mode(c.sampler);
  sc.points = parse_count(c.points);
  if (c.buffer < 1) fail("--buffer must be positive");
  sc.buffer = static_cast<std::size_t>(c.buffer);
  sc.seed = mix64(scene.seed ^ mix64(c.seed));
  sc.threads = c.threads;
  RenderOptions ro;
  ro.splat = parse_splat_mode(c.splat);
  ro.sort = parse_sort_mode(c.sort);
  ro.threads = c.threads;
  if (c.camera >= static_cast<int>(scene.cameras.size())) fail("--camera index out of range");
  const int frames = c.frames > 0 ? c.frames : static_cast<int>(scene.cameras.size());

  std::function<Feature4(const Vec3&)> radiance;
  if (!c.envmap.empty()) {
    auto map = std::make_shared<EnvironmentMap>(read_environment_map(c.envmap));
    radiance = [map](const Vec3& d) { return sample_env(*map, d); };
  } else {
    radiance = BackgroundOracle(scene.background_seed);
  }

  const AppearanceOracle oracle(scene.oracle_seed);
  FrameSampler sampler(scene.field, scene.cameras, oracle, sc);
  DirectionCache cache;
  std::filesystem::create_directories(c.out);

  std::ostringstream frames_csv, timing_csv;
  frames_csv << "frame,camera,points,projected,fragments,tile_copies,held_clouds,extractions,image_hash\n";
  timing_csv << "frame,threads,sample_seconds,render_seconds,write_seconds\n";
  for (int f = 0; f < frames; ++f) {
    const int cam_index = c.camera >= 0 ? c.camera : f % static_cast<int>(scene.cameras.size());
    const CameraView& cam = scene.cameras[cam_index];
    auto t0 = Clock::now();
    const PointSet& cloud = sampler.cloud_for(cam, static_cast<std::uint64_t>(f));
    const double sample_s = seconds_since(t0);
    t0 = Clock::now();
    const auto background = camera_background(cam, cache, radiance);
    RenderStats stats;
    const FeatureImage img = render_tiled(cloud, cam, background, ro, &stats);
    const double render_s = seconds_since(t0);
    t0 = Clock::now();
    const auto stem = frame_stem(c.out, f);
    write_feature_image(stem, img, {{"frame", f}, {"camera", cam_index}, {"points", cloud.size()}});
    if (c.preview) write_file(with_suffix(stem, ".ppm"), encode_ppm_preview(img));
    const double write_s = seconds_since(t0);
    frames_csv << f << ',' << cam_index << ',' << cloud.size() << ',' << stats.projected_points << ',' << stats.fragments
               << ',' << stats.two_stage.tile_sort.key_count << ',' << sampler.held_clouds() << ','
               << sampler.extractions() << ',' << hex64(image_hash(img)) << '\n';
    timing_csv << f << ',' << resolve_threads(c.threads) << ',' << num(sample_s) << ',' << num(render_s) << ','
               << num(write_s) << '\n';
    std::cout << "frame " << f << ": camera " << cam_index << ", " << cloud.size() << " points, " << sampler.held_clouds()
              << " cloud(s), " << num(render_s) << " s render\n";
  }
  write_text(c.out / "frames.csv", frames_csv.str());
  write_text(c.out / "timing.csv", timing_csv.str());
  write_manifest(c.out / "manifest.json", "render", to_json(c),
                 {{"scene", scene.seed},
                  {"oracle", scene.oracle_seed},
                  {"background", scene.background_seed},
                  {"sampler", sc.seed},
                  {"run", c.seed}},
                 {{"frames", frames}, {"points_per_frame", sc.points}});
  return kOk;
}

int cmd_bench(const BenchConfig& c) {
  if (c.runs < 1) fail("--runs must be positive");
  std::filesystem::create_directories(c.out);
  const std::uint64_t n = parse_count(c.points);
  const SplatList load = synthetic_splat_load(c.width, c.height, n, c.seed);
  const SortCostReport report = measure_sort_costs(load);
  const std::uint64_t placements = parse_count(c.placements);
  const double mc = tiles_per_splat_monte_carlo(placements, mix64(c.seed + 1));

  write_text(c.out / "sort_costs.csv", sort_costs_csv({report}));
  std::ostringstream md;
  md << sort_costs_markdown({report}) << "\n"
     << "Monte Carlo tiles per 2x2 splat over " << placements << " placements: " << num(mc)
     << " (analytic (1 + 1/8)^2 = " << num(1.125 * 1.125) << ")\n";
  write_text(c.out / "sort_costs.md", md.str());
  write_text(c.out / "tiles_per_splat.csv", "placements,mean_tiles,analytic\n" + std::to_string(placements) + "," +
                                                num(mc) + "," + num(1.125 * 1.125) + "\n");
  std::cout << md.str();

  if (c.dump_keys) {
    const auto sorted = sort_single64(gen_fragments(load), c.width, c.height).fragments;
    std::vector<std::uint8_t> bytes;
    bytes.reserve(sorted.size() * 8);
    for (const Fragment& f : sorted) {
      const std::uint64_t k = sort_key64(f.pixel, f.depth);
      for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(k >> (8 * i)));
    }
    write_file(c.out / "keys_single64.u64", bytes);
    const TileBins bins = sort_two_stage(load);
    bytes.clear();
    for (std::size_t t = 0; t < bins.tile_count(); ++t)
      for (std::size_t e = bins.offsets[t]; e < bins.offsets[t + 1]; ++e) {
        bytes.push_back(static_cast<std::uint8_t>(t & 0xff));
        bytes.push_back(static_cast<std::uint8_t>(t >> 8));
      }
    write_file(c.out / "keys_tile.u16", bytes);
  }

  // Timing is kept apart from the deterministic outputs above.
  const unsigned max_threads = resolve_threads(c.threads);
  std::ostringstream timing;
  timing << "measurement,threads,runs,median_seconds\n";
  const auto fragments = gen_fragments(load);
  timing << "sort_single64," << 1 << ',' << c.runs << ','
         << num(median_seconds([&] { (void)sort_single64(fragments, c.width, c.height); }, c.runs)) << '\n';
  timing << "sort_two_stage," << 1 << ',' << c.runs << ','
         << num(median_seconds([&] { (void)sort_two_stage(load); }, c.runs)) << '\n';
  if (!c.scene.empty()) {
    const Scene scene = read_scene(c.scene);
    if (scene.cameras.empty()) fail("scene has no cameras");
    const CameraView& cam = scene.cameras.front();
    const PointSet cloud = sample_view(scene.field, cam, AppearanceOracle(scene.oracle_seed), parse_count(c.render_points),
                                       mix64(scene.seed ^ c.seed));
    const auto background = background_image(world_ray_directions(cam, pixel_ray_directions(cam)),
                                             BackgroundOracle(scene.background_seed));
    for (SortMode sort : {SortMode::Single64, SortMode::TwoStage}) {
      for (unsigned threads : {1u, max_threads}) {
        RenderOptions ro;
        ro.sort = sort;
        ro.threads = threads;
        timing << "render_" << to_string(sort) << ',' << threads << ',' << c.runs << ','
               << num(median_seconds([&] { (void)render_tiled(cloud, cam, background, ro); }, c.runs)) << '\n';
        if (threads == max_threads && max_threads == 1) break;
      }
    }
  }
  write_text(c.out / "timing.csv", timing.str());
  write_manifest(c.out / "manifest.json", "bench", to_json(c), {{"load", c.seed}, {"monte_carlo", mix64(c.seed + 1)}});
  return kOk;
}

int cmd_distill_env(const DistillConfigCli& c) {
  DistillConfig dc = c.full_scale ? DistillConfig::full_scale() : DistillConfig{};
  if (!c.full_scale) {
    dc.height = c.size;
    dc.width = 2 * c.size;
    dc.batch = parse_count(c.batch);
  }
  dc.iterations = c.iters;
  dc.lr_start = c.lr_start;
  dc.lr_end = c.lr_end;
  dc.seed = c.seed;
  dc.optimizer = c.optimizer == "sgd" ? EnvOptimizer::Sgd : EnvOptimizer::Adam;
  dc.threads = c.threads;
  dc.validate();
  const std::uint64_t oracle_seed = c.scene.empty() ? c.seed : read_scene(c.scene).background_seed;
  const BackgroundOracle oracle(oracle_seed);

  const auto t0 = Clock::now();
  const DistillResult result = distill_env(oracle, dc);
  const double seconds = seconds_since(t0);
  const double mse = env_mse(result.map, oracle, 1ull << 18, mix64(c.seed ^ 0x686f6c64ull));
  const double psnr = psnr_from_mse(mse);

  write_environment_map(c.out, result.map, {{"oracle_seed", oracle_seed}});
  std::ostringstream loss;
  loss << "iteration,learning_rate,loss\n";
  for (std::size_t i = 0; i < result.loss.size(); ++i)
    loss << i << ',' << num(dc.learning_rate(static_cast<int>(i))) << ',' << num(result.loss[i]) << '\n';
  write_text(with_suffix(c.out, ".loss.csv"), loss.str());
  nlohmann::json report = {{"height", dc.height}, {"width", dc.width},  {"iterations", dc.iterations},
                           {"batch", dc.batch},   {"heldout_mse", mse}, {"heldout_psnr_db", psnr}};
  write_text(with_suffix(c.out, ".report.json"), report.dump(2) + "\n");
  write_text(with_suffix(c.out, ".timing.csv"),
             "threads,seconds\n" + std::to_string(resolve_threads(c.threads)) + "," + num(seconds) + "\n");
  write_manifest(with_suffix(c.out, ".manifest.json"), "distill-env", to_json(c),
                 {{"distill", c.seed}, {"oracle", oracle_seed}});
  std::cout << "distilled " << dc.height << "x" << dc.width << " map in " << num(seconds) << " s, held-out PSNR "
            << num(psnr) << " dB\n";
  return kOk;
}

int cmd_tonemap(const TonemapConfig& c) {
  ResponseCurve curve;
  double ev = 0;
  if (!c.curve.empty()) {
    const auto bytes = read_file(c.curve);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
      fail_io("curve file " + c.curve + " is not valid JSON: " + e.what());
    }
    std::tie(curve, ev) = curve_from_json(j);
  }
  if (c.ev) ev = *c.ev;
  FeatureImage img = read_feature_image(c.in);
  const bool forward = c.mode == "forward";
  for (Feature4& f : img.features)
    for (double& v : f) v = forward ? tonemap_forward(v, ev, curve) : tonemap_inverse(v, ev, curve);
  write_feature_image(c.out, img, {{"tonemap", c.mode}, {"source", c.in.filename().string()}, {"curve", curve_to_json(curve, ev)}});
  write_manifest(with_suffix(c.out, ".manifest.json"), "tonemap", to_json(c), nlohmann::json::object());
  return kOk;
}

int cmd_verify(const VerifyConfig& c) {
  VerifyOptions o;
  o.seed = c.seed;
  o.scale = c.scale;
  o.threads = c.threads;
  const SuiteReport report = run_verify_suite(c.suite, o);
  std::cout << report.to_text();
  if (!c.json.empty()) write_text(c.json, report.to_json().dump(2) + "\n");
  return report.passed() ? kOk : kVerifyFailed;
}

}  // namespace inpc::cli
