#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

namespace inpc::cli {

struct GenSceneConfig {
  std::string kind = "boxes";
  std::uint64_t seed = 0;
  int resolution = 128;
  int cameras = 24;
  int width = 256;
  int height = 192;
  std::filesystem::path out;
};

struct RenderConfig {
  std::filesystem::path scene;
  std::filesystem::path out;
  std::string sampler = "resample";
  std::string points = "2^20";
  int buffer = 4;
  std::string splat = "bilinear";
  std::string sort = "two-stage";
  std::uint64_t seed = 0;
  int frames = 0;
  int camera = -1;
  std::string envmap;
  bool preview = true;
  unsigned threads = 1;
};

struct BenchConfig {
  std::filesystem::path out;
  int width = 1920;
  int height = 1080;
  std::string points = "2^20";
  std::string placements = "1e6";
  std::uint64_t seed = 0;
  int runs = 5;
  std::string scene;
  std::string render_points = "2^18";
  bool dump_keys = false;
  unsigned threads = 0;
};

struct DistillConfigCli {
  std::filesystem::path out;
  int size = 256;
  int iters = 1000;
  std::string batch = "2^16";
  double lr_start = 0.01;
  double lr_end = 0.001;
  std::uint64_t seed = 0;
  std::string optimizer = "adam";
  std::string scene;
  bool full_scale = false;
  unsigned threads = 1;
};

struct TonemapConfig {
  std::string mode = "forward";
  std::filesystem::path in;
  std::filesystem::path out;
  std::string curve;
  std::optional<double> ev;
};

struct VerifyConfig {
  std::string suite;
  std::uint64_t seed = 1;
  double scale = 1.0;
  std::string json;
  unsigned threads = 1;
};

nlohmann::json to_json(const GenSceneConfig& c);
nlohmann::json to_json(const RenderConfig& c);
nlohmann::json to_json(const BenchConfig& c);
nlohmann::json to_json(const DistillConfigCli& c);
nlohmann::json to_json(const TonemapConfig& c);

int cmd_genscene(const GenSceneConfig& c);
int cmd_render(const RenderConfig& c);
int cmd_bench(const BenchConfig& c);
int cmd_distill_env(const DistillConfigCli& c);
int cmd_tonemap(const TonemapConfig& c);
int cmd_verify(const VerifyConfig& c);

/// Build identification recorded in manifests.
std::string git_describe();

}  // namespace inpc::cli
