#include "inpc/sh.hpp"

#include <cmath>

#include "inpc/error.hpp"

namespace inpc {

Feature4 eval_sh_degree2(const ShBlock& coeffs, const Vec3& dir) {
  for (double c : coeffs)
    if (std::isnan(c)) fail("NaN SH coefficient");
  const double n = norm(dir);
  if (!(n > 0) || !std::isfinite(n)) fail("SH direction must be non-zero and finite");
  const Vec3 d = std::abs(n - 1.0) > 1e-6 ? dir / n : dir;
  const auto basis = sh_basis(d);
  Feature4 out{};
  for (int c = 0; c < kFeatureChannels; ++c) {
    double acc = 0;
    for (int j = 0; j < kShCoeffsPerChannel; ++j) acc += coeffs[c * kShCoeffsPerChannel + j] * basis[j];
    out[c] = acc;
  }
  return out;
}

}  // namespace inpc
