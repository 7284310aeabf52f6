#include <cmath>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "inpc/cli.hpp"
#include "inpc/error.hpp"

namespace inpc::cli {
namespace {

// Values from a JSON config file, applied to options not given on the command line.
class ConfigOverlay {
 public:
  void load(const std::string& path, const std::string& subcommand) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open config " + path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Usage, "config " + path + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::Usage, "config " + path + " must hold a JSON object");
    values_ = j.contains(subcommand) && j.at(subcommand).is_object() ? j.at(subcommand) : j;
  }

  template <typename T>
  void apply(const CLI::App& sub, const std::string& key, T& target, std::string flag = {}) const {
    if (!values_.contains(key)) return;
    if (flag.empty()) flag = "--" + flag_name(key);
    const CLI::Option* opt = sub.get_option_no_throw(flag);
    if (opt != nullptr && opt->count() > 0) return;
    try {
      const nlohmann::json& v = values_.at(key);
      if constexpr (std::is_same_v<T, std::string>) {
        target = v.is_string() ? v.get<std::string>() : v.dump();
      } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
        target = v.get<std::string>();
      } else {
        target = v.get<T>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Usage, "config key '" + key + "': " + e.what());
    }
  }

 private:
  static std::string flag_name(std::string key) {
    for (char& ch : key)
      if (ch == '_') ch = '-';
    return key;
  }
  nlohmann::json values_ = nlohmann::json::object();
};

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Io:
      return kIo;
    case ErrorKind::Numerical:
      return kVerifyFailed;
    case ErrorKind::Usage:
    case ErrorKind::InvalidArgument:
      return kUsage;
  }
  return kUsage;
}

}  // namespace

unsigned long long parse_count(const std::string& text) {
  const auto bad = [&] { return Error(ErrorKind::Usage, "invalid count '" + text + "'"); };
  if (text.empty()) throw bad();
  std::size_t used = 0;
  try {
    if (const auto caret = text.find('^'); caret != std::string::npos) {
      const unsigned long long base = std::stoull(text.substr(0, caret), &used);
      if (used != caret) throw bad();
      const std::string exp_text = text.substr(caret + 1);
      const unsigned long long exp = std::stoull(exp_text, &used);
      if (used != exp_text.size() || exp > 63) throw bad();
      unsigned long long v = 1;
      for (unsigned long long i = 0; i < exp; ++i) {
        if (v > ~0ull / std::max(base, 1ull)) throw bad();
        v *= base;
      }
      return v;
    }
    if (text.find_first_of("eE.") != std::string::npos) {
      const double d = std::stod(text, &used);
      if (used != text.size() || !(d >= 0) || d > 1.8e19 || d != std::floor(d)) throw bad();
      return static_cast<unsigned long long>(d);
    }
    if (text.front() == '-') throw bad();
    const unsigned long long v = std::stoull(text, &used);
    if (used != text.size()) throw bad();
    return v;
  } catch (const std::logic_error&) {
    throw bad();
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Implicit point cloud rendering toolkit", "inpc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", git_describe());
  std::string config_path;
  app.add_option("--config", config_path, "JSON file with option values (flags take precedence)");

  GenSceneConfig gen;
  auto* g = app.add_subcommand("genscene", "Generate a synthetic scene container");
  g->add_option("--kind", gen.kind, "boxes | blobs | shell")->check(CLI::IsMember({"boxes", "blobs", "shell"}));
  g->add_option("--seed", gen.seed);
  g->add_option("--resolution", gen.resolution, "voxels per axis");
  g->add_option("--cameras", gen.cameras, "poses on the camera ring");
  g->add_option("--width", gen.width);
  g->add_option("--height", gen.height);
  g->add_option("--out", gen.out, "output scene file");

  RenderConfig ren;
  auto* r = app.add_subcommand("render", "Render a camera trajectory");
  r->add_option("--scene", ren.scene, "scene container");
  r->add_option("--out", ren.out, "output directory");
  r->add_option("--sampler", ren.sampler, "resample | ring | global")->check(CLI::IsMember({"resample", "ring", "global"}));
  r->add_option("--points", ren.points, "points per frame, e.g. 2^20");
  r->add_option("--buffer", ren.buffer, "ring buffer capacity");
  r->add_option("--splat", ren.splat, "bilinear | gaussian")->check(CLI::IsMember({"bilinear", "gaussian"}));
  r->add_option("--sort", ren.sort, "single64 | two-stage")->check(CLI::IsMember({"single64", "two-stage"}));
  r->add_option("--seed", ren.seed);
  r->add_option("--frames", ren.frames, "frames to render (default: one per camera)");
  r->add_option("--camera", ren.camera, "render every frame from this camera index");
  r->add_option("--envmap", ren.envmap, "distilled environment map stem used as background");
  r->add_flag("!--no-preview", ren.preview, "skip PPM previews");
  r->add_option("--threads", ren.threads, "worker threads (0 = all cores)");

  BenchConfig ben;
  auto* b = app.add_subcommand("bench", "Sort-cost accounting and timing");
  b->add_option("--out", ben.out, "output directory");
  b->add_option("--width", ben.width);
  b->add_option("--height", ben.height);
  b->add_option("--points", ben.points, "splats in the synthetic load");
  b->add_option("--placements", ben.placements, "Monte Carlo placements for tiles per splat");
  b->add_option("--seed", ben.seed);
  b->add_option("--runs", ben.runs, "timed runs per measurement (median reported)");
  b->add_option("--scene", ben.scene, "also time full renders of this scene");
  b->add_option("--render-points", ben.render_points, "points per render when timing a scene");
  b->add_flag("--dump-keys", ben.dump_keys, "write the sorted key arrays");
  b->add_option("--threads", ben.threads, "threads for the multi-threaded timing (0 = all cores)");

  DistillConfigCli dis;
  auto* d = app.add_subcommand("distill-env", "Distill a background oracle into an environment map");
  d->add_option("--out", dis.out, "output stem");
  d->add_option("--size", dis.size, "map height (width is twice the height)");
  d->add_option("--iters", dis.iters);
  d->add_option("--batch", dis.batch, "directions per iteration");
  d->add_option("--lr-start", dis.lr_start);
  d->add_option("--lr-end", dis.lr_end);
  d->add_option("--seed", dis.seed);
  d->add_option("--optimizer", dis.optimizer, "adam | sgd")->check(CLI::IsMember({"adam", "sgd"}));
  d->add_option("--scene", dis.scene, "take the background oracle seed from this scene");
  d->add_flag("--full-scale", dis.full_scale, "1024x2048 map with 2^21 directions per iteration");
  d->add_option("--threads", dis.threads);

  TonemapConfig ton;
  double ev_value = 0;
  auto* t = app.add_subcommand("tonemap", "Apply or invert the tonemapper on a feature dump");
  t->add_option("--mode", ton.mode, "forward | inverse")->check(CLI::IsMember({"forward", "inverse"}));
  t->add_option("--in", ton.in, "input feature dump stem");
  t->add_option("--out", ton.out, "output feature dump stem");
  t->add_option("--curve", ton.curve, "curve JSON ({\"ev\": .., \"curve\": [..]}); identity when omitted");
  auto* ev_opt = t->add_option("--ev", ev_value, "exposure value (overrides the curve file)");

  VerifyConfig ver;
  auto* v = app.add_subcommand("verify", "Run a property suite");
  v->add_option("suite", ver.suite, "gradcheck | sampling | tonemap | envmap")
      ->required()
      ->check(CLI::IsMember({"gradcheck", "sampling", "tonemap", "envmap"}));
  v->add_option("--seed", ver.seed);
  v->add_option("--scale", ver.scale, "scale of sample counts and iteration budgets");
  v->add_option("--json", ver.json, "write the report as JSON");
  v->add_option("--threads", ver.threads);

  for (CLI::App* sub : {g, r, b, d, t, v}) sub->add_option("--config", config_path, "JSON file with option values (flags take precedence)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    ConfigOverlay cfg;
    CLI::App* sub = app.get_subcommands().front();
    if (!config_path.empty()) cfg.load(config_path, sub->get_name());
    auto require = [&](bool ok, const char* what) {
      if (!ok) throw Error(ErrorKind::Usage, std::string(what) + " is required");
    };
    if (sub == g) {
      cfg.apply(*g, "kind", gen.kind);
      cfg.apply(*g, "seed", gen.seed);
      cfg.apply(*g, "resolution", gen.resolution);
      cfg.apply(*g, "cameras", gen.cameras);
      cfg.apply(*g, "width", gen.width);
      cfg.apply(*g, "height", gen.height);
      cfg.apply(*g, "out", gen.out);
      require(!gen.out.empty(), "--out");
      return cmd_genscene(gen);
    }
    if (sub == r) {
      cfg.apply(*r, "scene", ren.scene);
      cfg.apply(*r, "out", ren.out);
      cfg.apply(*r, "sampler", ren.sampler);
      cfg.apply(*r, "points", ren.points);
      cfg.apply(*r, "buffer", ren.buffer);
      cfg.apply(*r, "splat", ren.splat);
      cfg.apply(*r, "sort", ren.sort);
      cfg.apply(*r, "seed", ren.seed);
      cfg.apply(*r, "frames", ren.frames);
      cfg.apply(*r, "camera", ren.camera);
      cfg.apply(*r, "envmap", ren.envmap);
      cfg.apply(*r, "preview", ren.preview, "--no-preview");
      cfg.apply(*r, "threads", ren.threads);
      require(!ren.scene.empty(), "--scene");
      require(!ren.out.empty(), "--out");
      return cmd_render(ren);
    }
    if (sub == b) {
      cfg.apply(*b, "out", ben.out);
      cfg.apply(*b, "width", ben.width);
      cfg.apply(*b, "height", ben.height);
      cfg.apply(*b, "points", ben.points);
      cfg.apply(*b, "placements", ben.placements);
      cfg.apply(*b, "seed", ben.seed);
      cfg.apply(*b, "runs", ben.runs);
      cfg.apply(*b, "scene", ben.scene);
      cfg.apply(*b, "render_points", ben.render_points);
      cfg.apply(*b, "dump_keys", ben.dump_keys);
      cfg.apply(*b, "threads", ben.threads);
      require(!ben.out.empty(), "--out");
      return cmd_bench(ben);
    }
    if (sub == d) {
      cfg.apply(*d, "out", dis.out);
      cfg.apply(*d, "size", dis.size);
      cfg.apply(*d, "iters", dis.iters);
      cfg.apply(*d, "batch", dis.batch);
      cfg.apply(*d, "lr_start", dis.lr_start);
      cfg.apply(*d, "lr_end", dis.lr_end);
      cfg.apply(*d, "seed", dis.seed);
      cfg.apply(*d, "optimizer", dis.optimizer);
      cfg.apply(*d, "scene", dis.scene);
      cfg.apply(*d, "full_scale", dis.full_scale);
      cfg.apply(*d, "threads", dis.threads);
      require(!dis.out.empty(), "--out");
      return cmd_distill_env(dis);
    }
    if (sub == t) {
      cfg.apply(*t, "mode", ton.mode);
      cfg.apply(*t, "in", ton.in);
      cfg.apply(*t, "out", ton.out);
      cfg.apply(*t, "curve", ton.curve);
      if (ev_opt->count() > 0) {
        ton.ev = ev_value;
      } else {
        double ev = std::nan("");
        cfg.apply(*t, "ev", ev);
        if (!std::isnan(ev)) ton.ev = ev;
      }
      require(!ton.in.empty(), "--in");
      require(!ton.out.empty(), "--out");
      return cmd_tonemap(ton);
    }
    cfg.apply(*v, "seed", ver.seed);
    cfg.apply(*v, "scale", ver.scale);
    cfg.apply(*v, "json", ver.json);
    cfg.apply(*v, "threads", ver.threads);
    return cmd_verify(ver);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace inpc::cli
