#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "inpc/envmap.hpp"
#include "inpc/scene.hpp"
#include "inpc/tonemap.hpp"
#include "json.hpp"

namespace inpc {

inline constexpr std::uint32_t kSceneFormatVersion = 1;

/// Everything needed to reproduce renders of a synthetic scene.
struct Scene {
  std::string kind;
  std::uint64_t seed = 0;
  std::uint64_t oracle_seed = 0;
  std::uint64_t background_seed = 0;
  ProbabilityField field;
  std::vector<CameraView> cameras;
  std::optional<PointSet> points;

  bool operator==(const Scene& other) const;
};

/// Scene container: "INPCSCN1", u32 version, u32 header length, JSON header, then the binary
/// sections listed in the header (little-endian, offsets relative to the end of the header).
std::vector<std::uint8_t> encode_scene(const Scene& scene);
Scene decode_scene(const std::vector<std::uint8_t>& bytes);
void write_scene(const std::filesystem::path& path, const Scene& scene);
Scene read_scene(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Writes `<stem>.f32` (H x W x 4 float32), `<stem>.trans.f32` (H x W float32) and `<stem>.json`.
void write_feature_image(const std::filesystem::path& stem, const FeatureImage& image, const nlohmann::json& extra = {});
FeatureImage read_feature_image(const std::filesystem::path& stem);

/// 8-bit binary PPM of channels 0-2 mapped through the identity response curve.
std::vector<std::uint8_t> encode_ppm_preview(const FeatureImage& image);

/// Writes `<stem>.f32` (H x W x 4 float32) and `<stem>.json`.
void write_environment_map(const std::filesystem::path& stem, const EnvironmentMap& map, const nlohmann::json& extra = {});
EnvironmentMap read_environment_map(const std::filesystem::path& stem);

nlohmann::json curve_to_json(const ResponseCurve& curve, double ev);
std::pair<ResponseCurve, double> curve_from_json(const nlohmann::json& j);

nlohmann::json camera_to_json(const CameraView& camera);

}  // namespace inpc
