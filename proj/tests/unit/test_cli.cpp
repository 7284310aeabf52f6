#include <cmath>

#include "doctest.h"
#include "inpc/cli.hpp"
#include "inpc/error.hpp"
#include "inpc/io.hpp"
#include "test_support.hpp"

using namespace inpc;
using inpc::testing::TempDir;
using inpc::testing::read_csv;
using inpc::testing::read_text;

namespace {

int run(std::vector<std::string> args) { return cli::run(args); }

// Small scene shared by the render tests.
const TempDir& scene_dir() {
  static TempDir dir("cli_scene");
  static const bool made = [] {
    return run({"genscene", "--kind", "shell", "--seed", "3", "--resolution", "32", "--cameras", "6", "--width", "64",
                "--height", "48", "--out", (dir / "s.scn").string()}) == 0;
  }();
  REQUIRE(made);
  return dir;
}

std::string scene_path() { return scene_dir().str("s.scn"); }

}  // namespace

TEST_CASE("parse_count forms") {
  CHECK(cli::parse_count("2^20") == (1ull << 20));
  CHECK(cli::parse_count("1e6") == 1000000ull);
  CHECK(cli::parse_count("12345") == 12345ull);
  CHECK(cli::parse_count("0") == 0ull);
  for (const char* bad : {"", "-1", "2^", "abc", "1.5", "2^64", "12x"}) CHECK_THROWS_AS(cli::parse_count(bad), Error);
}

TEST_CASE("genscene: byte-identical, default resolution, valid field") {
  TempDir dir("cli_gen");
  REQUIRE(run({"genscene", "--kind", "blobs", "--seed", "9", "--out", dir.str("a.scn")}) == 0);
  REQUIRE(run({"genscene", "--kind", "blobs", "--seed", "9", "--out", dir.str("b.scn")}) == 0);
  CHECK(read_file(dir / "a.scn") == read_file(dir / "b.scn"));
  const Scene s = read_scene(dir / "a.scn");
  CHECK(s.field.resolution() == 128);
  CHECK(s.cameras.size() == 24);
  CHECK_NOTHROW(s.field.validate());
  const auto manifest = nlohmann::json::parse(read_text(dir.str("a.scn.manifest.json")));
  CHECK(manifest.at("config").at("seed") == 9);
  CHECK(manifest.contains("git_describe"));

  REQUIRE(run({"genscene", "--kind", "blobs", "--seed", "10", "--out", dir.str("c.scn")}) == 0);
  CHECK(read_file(dir / "a.scn") != read_file(dir / "c.scn"));
}

TEST_CASE("render: ring buffer holds four clouds") {
  TempDir out("cli_ring");
  REQUIRE(run({"render", "--scene", scene_path(), "--out", out.str("r"), "--sampler", "ring", "--buffer", "4", "--points",
               "2^16", "--frames", "6", "--no-preview"}) == 0);
  const auto rows = read_csv(out / "r/frames.csv");
  REQUIRE(rows.size() == 6);
  for (std::size_t f = 0; f < rows.size(); ++f) {
    CHECK(std::stoul(rows[f].at("held_clouds")) == std::min<std::size_t>(f + 1, 4));
    CHECK(std::stoul(rows[f].at("points")) == 16384 * std::min<std::size_t>(f + 1, 4));
  }
  CHECK(std::filesystem::exists(out / "r/frame_0005.f32"));
  CHECK_FALSE(std::filesystem::exists(out / "r/frame_0005.ppm"));
  CHECK(std::filesystem::exists(out / "r/manifest.json"));
  CHECK(std::filesystem::exists(out / "r/timing.csv"));
}

TEST_CASE("render: global sampler extracts once") {
  TempDir out("cli_global");
  REQUIRE(run({"render", "--scene", scene_path(), "--out", out.str("g"), "--sampler", "global", "--points", "2^16"}) ==
          0);
  const auto rows = read_csv(out / "g/frames.csv");
  REQUIRE(rows.size() == 6);
  for (const auto& row : rows) {
    CHECK(row.at("extractions") == "1");
    CHECK(row.at("points") == "65536");
  }
  const std::string ppm = read_text(out / "g/frame_0000.ppm");
  CHECK(ppm.rfind("P6\n64 48\n255\n", 0) == 0);
}

TEST_CASE("render: single64 and two-stage give identical images") {
  TempDir out("cli_sort");
  for (const char* sort : {"single64", "two-stage"}) {
    for (const char* splat : {"bilinear", "gaussian"}) {
      REQUIRE(run({"render", "--scene", scene_path(), "--out", out.str(std::string(sort) + splat), "--sort", sort,
                   "--splat", splat, "--points", "2^15", "--frames", "3", "--no-preview"}) == 0);
    }
  }
  for (const char* splat : {"bilinear", "gaussian"}) {
    const auto a = read_csv(out / (std::string("single64") + splat) / "frames.csv");
    const auto b = read_csv(out / (std::string("two-stage") + splat) / "frames.csv");
    REQUIRE(a.size() == 3);
    for (std::size_t f = 0; f < a.size(); ++f) CHECK(a[f].at("image_hash") == b[f].at("image_hash"));
    CHECK(read_file(out / (std::string("single64") + splat) / "frame_0002.f32") ==
          read_file(out / (std::string("two-stage") + splat) / "frame_0002.f32"));
  }
}

TEST_CASE("bench: cost ratio and tiles per splat") {
  TempDir out("cli_bench");
  REQUIRE(run({"bench", "--out", out.str("b"), "--points", "2^16", "--placements", "2e5", "--runs", "1", "--threads",
               "2", "--dump-keys"}) == 0);
  const auto costs = read_csv(out / "b/sort_costs.csv");
  REQUIRE(costs.size() == 1);
  CHECK(std::stod(costs[0].at("pass_cost_ratio")) == doctest::Approx(28.0 / 6.54).epsilon(0.02));
  CHECK(std::stod(costs[0].at("memory_saving_nominal")) == doctest::Approx(0.1825).epsilon(1e-6));
  const auto tiles = read_csv(out / "b/tiles_per_splat.csv");
  REQUIRE(tiles.size() == 1);
  CHECK(std::stod(tiles[0].at("mean_tiles")) == doctest::Approx(1.27).epsilon(0.01));
  CHECK(read_text(out / "b/sort_costs.md").find("| image |") == 0);
  CHECK(std::filesystem::file_size(out / "b/keys_tile.u16") > 0);
}

TEST_CASE("distill-env and tonemap round trip") {
  TempDir out("cli_env");
  REQUIRE(run({"distill-env", "--out", out.str("env"), "--size", "8", "--iters", "20", "--batch", "2^10"}) == 0);
  const EnvironmentMap map = read_environment_map(out / "env");
  CHECK(map.height() == 8);
  CHECK(map.width() == 16);
  CHECK(read_csv(out / "env.loss.csv").size() == 20);

  TempDir r("cli_tm");
  REQUIRE(run({"render", "--scene", scene_path(), "--out", r.str("f"), "--points", "2^15", "--frames", "1",
               "--no-preview"}) == 0);
  REQUIRE(run({"tonemap", "--mode", "forward", "--in", r.str("f/frame_0000"), "--out", r.str("fwd"), "--ev", "1"}) ==
          0);
  REQUIRE(run({"tonemap", "--mode", "inverse", "--in", r.str("fwd"), "--out", r.str("inv"), "--ev", "1"}) == 0);
  const FeatureImage fwd = read_feature_image(r / "fwd");
  for (const Feature4& f : fwd.features)
    for (double v : f) REQUIRE((v >= 0 && v <= 1));
  CHECK(read_feature_image(r / "inv").width == 64);
}

TEST_CASE("verify: exit codes") {
  TempDir out("cli_verify");
  CHECK(run({"verify", "tonemap", "--scale", "0.01", "--json", out.str("t.json")}) == cli::kOk);
  const auto report = nlohmann::json::parse(read_text(out / "t.json"));
  CHECK(report.at("passed") == true);
  CHECK(run({"verify", "nonsense"}) == cli::kUsage);
}

TEST_CASE("usage and io errors") {
  CHECK(run({}) == cli::kUsage);
  CHECK(run({"render", "--bogus"}) == cli::kUsage);
  CHECK(run({"render", "--scene", "x.scn"}) == cli::kUsage);
  CHECK(run({"render", "--scene", "/nonexistent/x.scn", "--out", "/tmp/inpc_never"}) == cli::kIo);
  CHECK(run({"genscene", "--kind", "teapot", "--out", "/tmp/x.scn"}) == cli::kUsage);
  CHECK(run({"render", "--scene", scene_path(), "--out", "/tmp/inpc_never", "--points", "lots"}) == cli::kUsage);
  CHECK(run({"genscene", "--config", "/nonexistent/cfg.json", "--out", "/tmp/x.scn"}) == cli::kIo);
}

TEST_CASE("config file values yield to flags") {
  TempDir dir("cli_cfg");
  inpc::write_text(dir / "cfg.json", R"({"genscene": {"seed": 5, "resolution": 16, "kind": "shell", "cameras": 2}})");
  REQUIRE(run({"genscene", "--config", dir.str("cfg.json"), "--seed", "7", "--out", dir.str("s.scn")}) == 0);
  const auto manifest = nlohmann::json::parse(read_text(dir / "s.scn.manifest.json"));
  CHECK(manifest.at("config").at("seed") == 7);
  CHECK(manifest.at("config").at("resolution") == 16);
  CHECK(manifest.at("config").at("kind") == "shell");
  CHECK(read_scene(dir / "s.scn").cameras.size() == 2);

  inpc::write_text(dir / "bad.json", "[1, 2]");
  CHECK(run({"genscene", "--config", dir.str("bad.json"), "--out", dir.str("t.scn")}) == cli::kUsage);
}
