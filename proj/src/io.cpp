#include "inpc/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "inpc/error.hpp"

namespace inpc {
namespace {

constexpr char kSceneMagic[8] = {'I', 'N', 'P', 'C', 'S', 'C', 'N', '1'};

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  std::size_t size() const { return bytes_.size(); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  float f32() { return std::bit_cast<float>(u32()); }
  bool done() const { return pos_ == size_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > size_) fail_io("truncated binary data");
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }
Vec3 json_vec(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

void encode_field(ByteWriter& w, const ProbabilityField& field) {
  for (const Voxel& v : field.voxels()) {
    w.u64(v.key.value);
    w.f64(v.center.x);
    w.f64(v.center.y);
    w.f64(v.center.z);
    w.f64(v.size);
    w.f64(v.weight);
  }
}

void encode_points(ByteWriter& w, const PointSet& points) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    w.f64(points.positions[i].x);
    w.f64(points.positions[i].y);
    w.f64(points.positions[i].z);
    w.f64(points.opacities[i]);
    for (double c : points.sh[i]) w.f64(c);
  }
}

void encode_camera(ByteWriter& w, const CameraView& c) {
  w.f64(c.fx);
  w.f64(c.fy);
  w.f64(c.cx);
  w.f64(c.cy);
  w.i32(c.width);
  w.i32(c.height);
  for (double r : c.world_to_camera.rotation.m) w.f64(r);
  w.f64(c.world_to_camera.translation.x);
  w.f64(c.world_to_camera.translation.y);
  w.f64(c.world_to_camera.translation.z);
  w.f64(c.z_near);
  w.u8(c.distortion ? 1 : 0);
  w.f64(c.distortion ? c.distortion->k1 : 0.0);
  w.f64(c.distortion ? c.distortion->k2 : 0.0);
}

CameraView decode_camera(ByteReader& r) {
  CameraView c;
  c.fx = r.f64();
  c.fy = r.f64();
  c.cx = r.f64();
  c.cy = r.f64();
  c.width = r.i32();
  c.height = r.i32();
  for (double& m : c.world_to_camera.rotation.m) m = r.f64();
  c.world_to_camera.translation.x = r.f64();
  c.world_to_camera.translation.y = r.f64();
  c.world_to_camera.translation.z = r.f64();
  c.z_near = r.f64();
  const bool has_dist = r.u8() != 0;
  const double k1 = r.f64(), k2 = r.f64();
  if (has_dist) c.distortion = RadialDistortion{k1, k2};
  return c;
}

nlohmann::json parse_json(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail_io(what + ": invalid JSON (" + e.what() + ")");
  }
}

nlohmann::json read_json(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_json(std::string(bytes.begin(), bytes.end()), path.string());
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const std::string& suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

}  // namespace

bool Scene::operator==(const Scene& o) const {
  if (kind != o.kind || seed != o.seed || oracle_seed != o.oracle_seed || background_seed != o.background_seed) return false;
  if (field.resolution() != o.field.resolution() || !(field.bounds() == o.field.bounds()) || field.size() != o.field.size())
    return false;
  for (std::size_t i = 0; i < field.size(); ++i) {
    const Voxel &a = field.voxels()[i], &b = o.field.voxels()[i];
    if (a.key != b.key || !(a.center == b.center) || a.size != b.size || a.weight != b.weight) return false;
  }
  if (cameras != o.cameras || points.has_value() != o.points.has_value()) return false;
  if (points) {
    if (points->positions != o.points->positions || points->opacities != o.points->opacities || points->sh != o.points->sh)
      return false;
  }
  return true;
}

std::vector<std::uint8_t> encode_scene(const Scene& scene) {
  ByteWriter data;
  nlohmann::json sections = nlohmann::json::array();
  auto add_section = [&](const std::string& name, std::size_t begin, std::size_t count, std::size_t record) {
    sections.push_back({{"name", name}, {"offset", begin}, {"size", data.size() - begin}, {"count", count}, {"record_bytes", record}});
  };
  std::size_t begin = data.size();
  encode_field(data, scene.field);
  add_section("field", begin, scene.field.size(), 48);
  begin = data.size();
  for (const CameraView& c : scene.cameras) encode_camera(data, c);
  add_section("cameras", begin, scene.cameras.size(), 201);
  if (scene.points) {
    begin = data.size();
    encode_points(data, *scene.points);
    add_section("points", begin, scene.points->size(), 8 * (4 + kShBlockSize));
  }

  nlohmann::json header = {
      {"format", "inpc-scene"},
      {"version", kSceneFormatVersion},
      {"kind", scene.kind},
      {"seed", scene.seed},
      {"oracle_seed", scene.oracle_seed},
      {"background_seed", scene.background_seed},
      {"resolution", scene.field.resolution()},
      {"bounds", {{"min", vec_json(scene.field.bounds().min)}, {"max", vec_json(scene.field.bounds().max)}}},
      {"sections", sections},
  };
  const std::string text = header.dump();
  ByteWriter out;
  out.raw(kSceneMagic, sizeof(kSceneMagic));
  out.u32(kSceneFormatVersion);
  out.u32(static_cast<std::uint32_t>(text.size()));
  out.raw(text.data(), text.size());
  out.raw(data.bytes().data(), data.size());
  return std::move(out.bytes());
}

Scene decode_scene(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kSceneMagic, sizeof(kSceneMagic)) != 0) fail_io("not an INPC scene container");
  ByteReader head(bytes.data() + 8, 8);
  const std::uint32_t version = head.u32();
  if (version != kSceneFormatVersion) fail_io("unsupported scene format version " + std::to_string(version));
  const std::uint32_t header_len = head.u32();
  if (16 + static_cast<std::size_t>(header_len) > bytes.size()) fail_io("truncated scene header");
  const nlohmann::json header = parse_json(std::string(bytes.begin() + 16, bytes.begin() + 16 + header_len), "scene header");
  const std::uint8_t* data = bytes.data() + 16 + header_len;
  const std::size_t data_size = bytes.size() - 16 - header_len;

  Scene scene;
  try {
    scene.kind = header.at("kind").get<std::string>();
    scene.seed = header.at("seed").get<std::uint64_t>();
    scene.oracle_seed = header.at("oracle_seed").get<std::uint64_t>();
    scene.background_seed = header.at("background_seed").get<std::uint64_t>();
    const int resolution = header.at("resolution").get<int>();
    const SceneBounds bounds{json_vec(header.at("bounds").at("min")), json_vec(header.at("bounds").at("max"))};
    std::vector<Voxel> voxels;
    for (const auto& s : header.at("sections")) {
      const auto offset = s.at("offset").get<std::size_t>();
      const auto size = s.at("size").get<std::size_t>();
      const auto count = s.at("count").get<std::size_t>();
      if (offset + size > data_size) fail_io("scene section out of bounds");
      ByteReader r(data + offset, size);
      const std::string name = s.at("name").get<std::string>();
      if (name == "field") {
        voxels.resize(count);
        for (Voxel& v : voxels) {
          v.key.value = r.u64();
          v.center = {r.f64(), r.f64(), r.f64()};
          v.size = r.f64();
          v.weight = r.f64();
        }
      } else if (name == "cameras") {
        for (std::size_t i = 0; i < count; ++i) scene.cameras.push_back(decode_camera(r));
      } else if (name == "points") {
        PointSet pts;
        pts.positions.resize(count);
        pts.opacities.resize(count);
        pts.sh.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
          pts.positions[i] = {r.f64(), r.f64(), r.f64()};
          pts.opacities[i] = r.f64();
          for (double& c : pts.sh[i]) c = r.f64();
        }
        scene.points = std::move(pts);
      } else {
        continue;
      }
      if (!r.done()) fail_io("scene section '" + name + "' has trailing bytes");
    }
    scene.field = ProbabilityField(resolution, bounds, std::move(voxels));
  } catch (const nlohmann::json::exception& e) {
    fail_io(std::string("malformed scene header: ") + e.what());
  }
  for (const CameraView& c : scene.cameras) c.validate();
  if (scene.points) scene.points->validate();
  return scene;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail_io("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail_io("write failed for " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void write_scene(const std::filesystem::path& path, const Scene& scene) { write_file(path, encode_scene(scene)); }

Scene read_scene(const std::filesystem::path& path) { return decode_scene(read_file(path)); }

void write_feature_image(const std::filesystem::path& stem, const FeatureImage& image, const nlohmann::json& extra) {
  ByteWriter features, trans;
  for (const Feature4& f : image.features)
    for (double v : f) features.f32(static_cast<float>(v));
  for (double t : image.transmittance) trans.f32(static_cast<float>(t));
  write_file(with_suffix(stem, ".f32"), features.bytes());
  write_file(with_suffix(stem, ".trans.f32"), trans.bytes());
  nlohmann::json meta = {{"width", image.width},
                         {"height", image.height},
                         {"channels", kFeatureChannels},
                         {"dtype", "float32"},
                         {"byte_order", "little"},
                         {"layout", "HWC"},
                         {"features", with_suffix(stem, ".f32").filename().string()},
                         {"transmittance", with_suffix(stem, ".trans.f32").filename().string()}};
  if (!extra.is_null()) meta["meta"] = extra;
  write_text(with_suffix(stem, ".json"), meta.dump(2) + "\n");
}

FeatureImage read_feature_image(const std::filesystem::path& stem) {
  const nlohmann::json meta = read_json(with_suffix(stem, ".json"));
  const int w = meta.at("width").get<int>(), h = meta.at("height").get<int>();
  if (meta.at("channels").get<int>() != kFeatureChannels) fail_io("feature image must have 4 channels");
  FeatureImage img(w, h);
  const auto fbytes = read_file(with_suffix(stem, ".f32"));
  if (fbytes.size() != img.pixel_count() * kFeatureChannels * 4) fail_io("feature dump size does not match its sidecar");
  ByteReader fr(fbytes.data(), fbytes.size());
  for (Feature4& f : img.features)
    for (double& v : f) v = fr.f32();
  const auto tpath = with_suffix(stem, ".trans.f32");
  if (std::filesystem::exists(tpath)) {
    const auto tbytes = read_file(tpath);
    if (tbytes.size() != img.pixel_count() * 4) fail_io("transmittance dump size does not match its sidecar");
    ByteReader tr(tbytes.data(), tbytes.size());
    for (double& t : img.transmittance) t = tr.f32();
  }
  return img;
}

std::vector<std::uint8_t> encode_ppm_preview(const FeatureImage& image) {
  const std::string header = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const ResponseCurve identity;
  for (const Feature4& f : image.features)
    for (int c = 0; c < 3; ++c)
      out.push_back(static_cast<std::uint8_t>(std::lround(255.0 * tonemap_forward(f[c], 0.0, identity))));
  return out;
}

void write_environment_map(const std::filesystem::path& stem, const EnvironmentMap& map, const nlohmann::json& extra) {
  ByteWriter data;
  for (const Feature4& t : map.texels())
    for (double v : t) data.f32(static_cast<float>(v));
  write_file(with_suffix(stem, ".f32"), data.bytes());
  nlohmann::json meta = {{"height", map.height()}, {"width", map.width()},         {"channels", 4},
                         {"dtype", "float32"},     {"byte_order", "little"},       {"layout", "HWC"},
                         {"projection", "equirectangular, u = atan2(dx, dz), v = acos(dy), y up"},
                         {"data", with_suffix(stem, ".f32").filename().string()}};
  if (!extra.is_null()) meta["meta"] = extra;
  write_text(with_suffix(stem, ".json"), meta.dump(2) + "\n");
}

EnvironmentMap read_environment_map(const std::filesystem::path& stem) {
  const nlohmann::json meta = read_json(with_suffix(stem, ".json"));
  EnvironmentMap map(meta.at("height").get<int>(), meta.at("width").get<int>());
  const auto bytes = read_file(with_suffix(stem, ".f32"));
  if (bytes.size() != map.texels().size() * 16) fail_io("environment map size does not match its header");
  ByteReader r(bytes.data(), bytes.size());
  for (Feature4& t : map.texels())
    for (double& v : t) v = r.f32();
  return map;
}

nlohmann::json curve_to_json(const ResponseCurve& curve, double ev) {
  return {{"ev", ev}, {"curve", std::vector<double>(curve.values().begin(), curve.values().end())}};
}

std::pair<ResponseCurve, double> curve_from_json(const nlohmann::json& j) {
  try {
    const double ev = j.value("ev", 0.0);
    if (!j.contains("curve")) return {ResponseCurve(), ev};
    return {ResponseCurve::from_values(j.at("curve").get<std::vector<double>>()), ev};
  } catch (const nlohmann::json::exception& e) {
    fail_io(std::string("malformed curve JSON: ") + e.what());
  }
}

nlohmann::json camera_to_json(const CameraView& c) {
  nlohmann::json j = {{"fx", c.fx},       {"fy", c.fy},         {"cx", c.cx},
                      {"cy", c.cy},       {"width", c.width},   {"height", c.height},
                      {"z_near", c.z_near}, {"rotation", c.world_to_camera.rotation.m},
                      {"translation", vec_json(c.world_to_camera.translation)}};
  if (c.distortion) j["distortion"] = {{"k1", c.distortion->k1}, {"k2", c.distortion->k2}};
  return j;
}

}  // namespace inpc
