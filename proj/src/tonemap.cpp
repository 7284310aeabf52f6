#include "inpc/tonemap.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "inpc/error.hpp"

namespace inpc {

ResponseCurve::ResponseCurve(int knots) {
  if (knots < 2) fail("response curve needs at least 2 knots");
  values_.resize(knots);
  for (int k = 0; k < knots; ++k) values_[k] = static_cast<double>(k) / (knots - 1);
  values_.back() = 1.0;
}

ResponseCurve ResponseCurve::from_values(std::vector<double> values) {
  validate_curve(values);
  ResponseCurve c(2);
  c.values_ = std::move(values);
  return c;
}

void validate_curve(std::span<const double> values, double min_gap) {
  if (values.size() < 2) fail("response curve needs at least 2 knots");
  if (values.front() != 0.0 || values.back() != 1.0) fail("response curve endpoints must be exactly 0 and 1");
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (!std::isfinite(values[k]) || !(values[k] - values[k - 1] >= min_gap))
      fail("response curve must increase by at least " + std::to_string(min_gap) + " per knot (knot " + std::to_string(k) + ")");
  }
}

double ResponseCurve::evaluate(double e) const {
  const int segments = knots() - 1;
  const double x = std::clamp(e, 0.0, 1.0) * segments;
  const int seg = std::min(static_cast<int>(x), segments - 1);
  const double t = x - seg;
  return values_[seg] + t * (values_[seg + 1] - values_[seg]);
}

double ResponseCurve::invert(double y) const {
  // First knot with value > y, so y lies in [values[seg], values[seg + 1]).
  const auto it = std::upper_bound(values_.begin(), values_.end(), y);
  const int segments = knots() - 1;
  const int seg = std::clamp(static_cast<int>(it - values_.begin()) - 1, 0, segments - 1);
  const double t = (y - values_[seg]) / (values_[seg + 1] - values_[seg]);
  return (seg + t) / segments;
}

ResponseCurve project_curve(std::span<const double> raw, double min_gap) {
  if (raw.size() < 2) fail("project_curve: need at least 2 values");
  for (double v : raw)
    if (!std::isfinite(v)) fail("project_curve: non-finite value");
  const std::size_t k = raw.size();
  std::vector<double> v(raw.begin(), raw.end());
  for (std::size_t i = 1; i < k; ++i) v[i] = std::max(v[i], v[i - 1] + min_gap);
  const double lo = v.front(), span = v.back() - lo;
  for (double& x : v) x = (x - lo) / span;
  v.front() = 0.0;
  v.back() = 1.0;
  // Renormalization can shrink gaps when the raw range exceeded 1; restore them inside [0, 1].
  // Nudge by ulps afterwards: v + gap can round to a difference just below gap.
  for (std::size_t i = 1; i + 1 < k; ++i) {
    v[i] = std::max(v[i], v[i - 1] + min_gap);
    while (v[i] - v[i - 1] < min_gap) v[i] = std::nextafter(v[i], 2.0);
  }
  for (std::size_t i = k - 1; i-- > 1;) {
    v[i] = std::min(v[i], v[i + 1] - min_gap);
    while (v[i + 1] - v[i] < min_gap) v[i] = std::nextafter(v[i], -1.0);
  }
  return ResponseCurve::from_values(std::move(v));
}

double tonemap_forward(double hdr, double ev, const ResponseCurve& curve) {
  const double e = std::clamp(hdr / std::exp2(ev), 0.0, 1.0);
  return curve.evaluate(e);
}

double tonemap_inverse(double srgb, double ev, const ResponseCurve& curve) {
  if (!(srgb >= -1e-12 && srgb <= 1.0 + 1e-12)) fail("tonemap_inverse: value outside [0, 1]");
  return curve.invert(std::clamp(srgb, 0.0, 1.0)) * std::exp2(ev);
}

std::vector<double> tonemap_forward(std::span<const double> hdr, double ev, const ResponseCurve& curve) {
  std::vector<double> out(hdr.size());
  for (std::size_t i = 0; i < hdr.size(); ++i) out[i] = tonemap_forward(hdr[i], ev, curve);
  return out;
}

std::vector<double> tonemap_inverse(std::span<const double> srgb, double ev, const ResponseCurve& curve) {
  std::vector<double> out(srgb.size());
  for (std::size_t i = 0; i < srgb.size(); ++i) out[i] = tonemap_inverse(srgb[i], ev, curve);
  return out;
}

}  // namespace inpc
