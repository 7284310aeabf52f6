#include "inpc/envmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "inpc/appearance.hpp"
#include "inpc/error.hpp"
#include "inpc/parallel.hpp"

namespace inpc {
namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
// Applied to the per-sample gradient scale (mean gradient times batch size).
constexpr double kAdamEpsilon = 1e-10;

std::mt19937_64 iteration_rng(std::uint64_t seed, std::uint64_t stream) { return std::mt19937_64(mix64(seed ^ mix64(stream))); }

}  // namespace

EnvironmentMap::EnvironmentMap(int height, int width, Feature4 fill) : height_(height), width_(width) {
  if (height < 1 || width != 2 * height) fail("environment map must satisfy W = 2H >= 2");
  texels_.assign(static_cast<std::size_t>(height) * width, fill);
}

void EnvironmentMap::validate() const {
  if (height_ < 1 || width_ != 2 * height_) fail("environment map must satisfy W = 2H >= 2");
  if (texels_.size() != static_cast<std::size_t>(height_) * width_) fail("environment map texel count mismatch");
  for (const auto& t : texels_)
    for (double v : t)
      if (!std::isfinite(v)) fail("environment map contains non-finite values");
}

EnvTaps env_taps(const EnvironmentMap& map, const Vec3& dir) {
  const double n = norm(dir);
  if (!(n > 0) || !std::isfinite(n)) fail("sample_env: direction must be non-zero and finite");
  const Vec3 d = dir / n;
  const double u = (std::atan2(d.x, d.z) / (2.0 * std::numbers::pi) + 0.5) * map.width();
  const double v = std::acos(std::clamp(d.y, -1.0, 1.0)) / std::numbers::pi * map.height();

  const double x = u - 0.5;
  const double x0f = std::floor(x);
  const double fx = x - x0f;
  const int w = map.width();
  const int c0 = ((static_cast<int>(x0f) % w) + w) % w;
  const int c1 = (c0 + 1) % w;

  const double y = v - 0.5;
  int r0, r1;
  double fy;
  if (y <= 0) {
    r0 = r1 = 0;
    fy = 0;
  } else if (y >= map.height() - 1) {
    r0 = r1 = map.height() - 1;
    fy = 0;
  } else {
    const double y0f = std::floor(y);
    r0 = static_cast<int>(y0f);
    r1 = r0 + 1;
    fy = y - y0f;
  }
  EnvTaps taps;
  auto idx = [&](int r, int c) { return static_cast<std::size_t>(r) * w + c; };
  taps.texel = {idx(r0, c0), idx(r0, c1), idx(r1, c0), idx(r1, c1)};
  taps.weight = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  taps.fx = fx;
  taps.fy = fy;
  return taps;
}

Feature4 interpolate_taps(const EnvTaps& taps, std::span<const Feature4> texels) {
  const Feature4 &a = texels[taps.texel[0]], &b = texels[taps.texel[1]];
  const Feature4 &c = texels[taps.texel[2]], &d = texels[taps.texel[3]];
  Feature4 out;
  for (int ch = 0; ch < 4; ++ch) {
    const double top = a[ch] + taps.fx * (b[ch] - a[ch]);
    const double bottom = c[ch] + taps.fx * (d[ch] - c[ch]);
    out[ch] = top + taps.fy * (bottom - top);
  }
  return out;
}

Feature4 sample_env(const EnvironmentMap& map, const Vec3& dir) { return interpolate_taps(env_taps(map, dir), map.texels()); }

Vec3 env_texel_direction(const EnvironmentMap& map, int row, int col) {
  const double phi = ((col + 0.5) / map.width() - 0.5) * 2.0 * std::numbers::pi;
  const double theta = (row + 0.5) / map.height() * std::numbers::pi;
  return {std::sin(theta) * std::sin(phi), std::cos(theta), std::sin(theta) * std::cos(phi)};
}

Vec3 sphere_direction(double u1, double u2) {
  const double z = 1.0 - 2.0 * u1;
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(phi), r * std::sin(phi), z};
}

DistillConfig DistillConfig::full_scale() {
  DistillConfig c;
  c.height = 1024;
  c.width = 2048;
  c.iterations = 1000;
  c.batch = 1ull << 21;
  return c;
}

void DistillConfig::validate() const {
  if (height < 1 || width != 2 * height) fail("distill: map size must satisfy W = 2H");
  if (iterations < 1 || batch < 1) fail("distill: iterations and batch must be positive");
  if (!(lr_start > 0) || !(lr_end > 0)) fail("distill: learning rates must be positive");
}

double DistillConfig::learning_rate(int iteration) const {
  if (iterations <= 1) return lr_start;
  const double t = static_cast<double>(iteration) / (iterations - 1);
  return lr_start * std::pow(lr_end / lr_start, t);
}

DistillResult distill_env(const DirectionalOracle& oracle, const DistillConfig& config) {
  config.validate();
  // Spherical mean estimate as the initial value of every texel.
  Feature4 mean{};
  {
    auto rng = iteration_rng(config.seed, 0x6d65616eull);
    // Running mean: exact when the oracle is constant.
    for (std::uint64_t i = 0; i < config.mean_samples; ++i) {
      const Vec3 d = sphere_direction(to_unit(rng()), to_unit(rng()));
      const Feature4 f = oracle(d);
      for (int c = 0; c < 4; ++c) mean[c] += (f[c] - mean[c]) / static_cast<double>(i + 1);
    }
  }
  DistillResult result{EnvironmentMap(config.height, config.width, mean), {}};
  auto& texels = result.map.texels();
  const std::size_t texel_count = texels.size();
  std::vector<Feature4> grad(texel_count), m1(texel_count), m2(texel_count);
  std::vector<Vec3> dirs(config.batch);
  std::vector<EnvTaps> taps(config.batch);
  std::vector<Feature4> err(config.batch);
  const double grad_scale = 2.0 / (4.0 * static_cast<double>(config.batch));
  const std::size_t chunks = 64;

  for (int it = 0; it < config.iterations; ++it) {
    auto rng = iteration_rng(config.seed, 0x69746572ull + static_cast<std::uint64_t>(it));
    for (auto& d : dirs) d = sphere_direction(to_unit(rng()), to_unit(rng()));
    std::vector<double> chunk_loss(chunks, 0.0);
    parallel_for(chunks, config.threads, [&](std::size_t ch) {
      const std::size_t begin = config.batch * ch / chunks, end = config.batch * (ch + 1) / chunks;
      double acc = 0;
      for (std::size_t i = begin; i < end; ++i) {
        taps[i] = env_taps(result.map, dirs[i]);
        const Feature4 target = oracle(dirs[i]);
        const Feature4 pred = interpolate_taps(taps[i], texels);
        for (int c = 0; c < 4; ++c) {
          err[i][c] = pred[c] - target[c];
          acc += err[i][c] * err[i][c];
        }
      }
      chunk_loss[ch] = acc;
    });
    double loss = 0;
    for (double l : chunk_loss) loss += l;
    loss /= 4.0 * static_cast<double>(config.batch);
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "distill_env: non-finite loss at iteration " << it << " (lr " << config.learning_rate(it) << ")";
      fail_numeric(msg.str());
    }
    result.loss.push_back(loss);

    // Sequential scatter keeps the gradient independent of the worker count.
    std::fill(grad.begin(), grad.end(), Feature4{});
    for (std::size_t i = 0; i < config.batch; ++i)
      for (int k = 0; k < 4; ++k)
        for (int c = 0; c < 4; ++c) grad[taps[i].texel[k]][c] += taps[i].weight[k] * err[i][c];

    const double lr = config.learning_rate(it);
    if (config.optimizer == EnvOptimizer::Sgd) {
      for (std::size_t t = 0; t < texel_count; ++t)
        for (int c = 0; c < 4; ++c) texels[t][c] -= lr * grad_scale * grad[t][c];
    } else {
      const double bc1 = 1.0 - std::pow(kAdamBeta1, it + 1);
      const double bc2 = 1.0 - std::pow(kAdamBeta2, it + 1);
      const double per_sample = grad_scale * static_cast<double>(config.batch);
      for (std::size_t t = 0; t < texel_count; ++t) {
        for (int c = 0; c < 4; ++c) {
          const double g = per_sample * grad[t][c];
          m1[t][c] = kAdamBeta1 * m1[t][c] + (1 - kAdamBeta1) * g;
          m2[t][c] = kAdamBeta2 * m2[t][c] + (1 - kAdamBeta2) * g * g;
          texels[t][c] -= lr * (m1[t][c] / bc1) / (std::sqrt(m2[t][c] / bc2) + kAdamEpsilon);
        }
      }
    }
  }
  result.map.validate();
  return result;
}

double env_mse(const EnvironmentMap& map, const DirectionalOracle& oracle, std::uint64_t count, std::uint64_t seed) {
  auto rng = iteration_rng(seed, 0x686f6c64ull);
  double acc = 0;
  for (std::uint64_t i = 0; i < count; ++i) {
    const Vec3 d = sphere_direction(to_unit(rng()), to_unit(rng()));
    const Feature4 a = sample_env(map, d), b = oracle(d);
    for (int c = 0; c < 4; ++c) acc += (a[c] - b[c]) * (a[c] - b[c]);
  }
  return acc / (4.0 * static_cast<double>(count));
}

double psnr_from_mse(double mse) { return mse <= 0 ? std::numeric_limits<double>::infinity() : -10.0 * std::log10(mse); }

}  // namespace inpc
