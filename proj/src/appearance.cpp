#include "inpc/appearance.hpp"

#include <cmath>
#include <numbers>

#include "inpc/error.hpp"
#include "inpc/sh.hpp"

namespace inpc {
namespace {

class SeedStream {
 public:
  explicit SeedStream(std::uint64_t seed) : state_(mix64(seed ^ 0x1b873593a5a5a5a5ull)) {}
  double next() { return to_unit(mix64(state_++)); }
  double range(double lo, double hi) { return lo + (hi - lo) * next(); }

 private:
  std::uint64_t state_;
};

Vec3 random_freq(SeedStream& s, double lo, double hi) {
  // Random direction scaled to a magnitude in [lo, hi].
  const double z = s.range(-1, 1);
  const double phi = s.range(0, 2 * std::numbers::pi);
  const double r = std::sqrt(1 - z * z);
  return Vec3{r * std::cos(phi), r * std::sin(phi), z} * s.range(lo, hi);
}

}  // namespace

AppearanceOracle::AppearanceOracle(std::uint64_t seed) : seed_(seed) {
  SeedStream s(seed);
  opacity_wave_ = {random_freq(s, 3.0, 5.0), s.range(0, 2 * std::numbers::pi), 1.0, 0.0};
  opacity_warp_ = {random_freq(s, 1.0, 2.0), s.range(0, 2 * std::numbers::pi), 0.6, 0.0};
  for (int c = 0; c < kFeatureChannels; ++c) {
    for (int j = 0; j < kShCoeffsPerChannel; ++j) {
      Wave& w = sh_waves_[c * kShCoeffsPerChannel + j];
      w.freq = random_freq(s, 0.5, 3.0);
      w.phase = s.range(0, 2 * std::numbers::pi);
      if (j == 0) {
        w.offset = 0.5 / kShC0;
        w.amplitude = 0.35 / kShC0;
      } else {
        w.amplitude = j < 4 ? 0.08 : 0.04;
      }
    }
  }
}

double AppearanceOracle::opacity(const Vec3& p) const {
  const double warp = opacity_warp_.amplitude * std::sin(dot(opacity_warp_.freq, p) + opacity_warp_.phase);
  return 0.5 + 0.5 * std::sin(dot(opacity_wave_.freq, p) + opacity_wave_.phase + warp);
}

ShBlock AppearanceOracle::sh(const Vec3& p) const {
  ShBlock out;
  for (int k = 0; k < kShBlockSize; ++k) {
    const Wave& w = sh_waves_[k];
    out[k] = w.offset + w.amplitude * std::sin(dot(w.freq, p) + w.phase);
  }
  return out;
}

AppearanceBatch query_appearance(const AppearanceOracle& oracle, std::span<const Vec3> contracted) {
  AppearanceBatch out;
  out.opacities.resize(contracted.size());
  out.sh.resize(contracted.size());
  for (std::size_t i = 0; i < contracted.size(); ++i) {
    if (!(norm(contracted[i]) <= 2.0 + 1e-6)) fail("appearance query outside the contraction ball");
    out.opacities[i] = oracle.opacity(contracted[i]);
    out.sh[i] = oracle.sh(contracted[i]);
  }
  return out;
}

BackgroundOracle::BackgroundOracle(std::uint64_t seed) {
  SeedStream s(seed ^ 0x6a09e667f3bcc909ull);
  for (int c = 0; c < kFeatureChannels; ++c) {
    coeffs_[c * kShCoeffsPerChannel] = s.range(0.35, 0.65) / kShC0;
    for (int j = 1; j < kShCoeffsPerChannel; ++j) coeffs_[c * kShCoeffsPerChannel + j] = s.range(-0.1, 0.1);
  }
}

BackgroundOracle BackgroundOracle::constant(double value) {
  BackgroundOracle o(0);
  o.coeffs_.fill(0);
  for (int c = 0; c < kFeatureChannels; ++c) o.coeffs_[c * kShCoeffsPerChannel] = value / kShC0;
  return o;
}

Feature4 BackgroundOracle::operator()(const Vec3& dir) const {
  const auto basis = sh_basis(dir);
  Feature4 out{};
  for (int c = 0; c < kFeatureChannels; ++c) {
    double acc = 0;
    for (int j = 0; j < kShCoeffsPerChannel; ++j) acc += coeffs_[c * kShCoeffsPerChannel + j] * basis[j];
    out[c] = acc;
  }
  return out;
}

}  // namespace inpc
