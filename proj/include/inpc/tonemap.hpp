#pragma once

#include <span>
#include <vector>

namespace inpc {

inline constexpr int kDefaultCurveKnots = 25;
inline constexpr double kCurveMinGap = 1e-6;

/// Piecewise-linear camera response over uniform knots on [0, 1] with pinned endpoints 0 and 1.
class ResponseCurve {
 public:
  /// Identity curve r_k = k / (K - 1).
  explicit ResponseCurve(int knots = kDefaultCurveKnots);
  /// Throws unless the values already satisfy every curve invariant.
  static ResponseCurve from_values(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  int knots() const { return static_cast<int>(values_.size()); }

  /// Piecewise-linear interpolation at e in [0, 1].
  double evaluate(double e) const;
  /// Preimage of y in [0, 1] (binary search over the control values).
  double invert(double y) const;

 private:
  std::vector<double> values_;
};

/// Throws if the values break an invariant (K >= 2, endpoints exactly 0 and 1, gaps >= min_gap).
void validate_curve(std::span<const double> values, double min_gap = kCurveMinGap);

/// Nearest valid curve: cumulative max with min_gap spacing, then affine renormalization to [0, 1].
ResponseCurve project_curve(std::span<const double> raw, double min_gap = kCurveMinGap);

/// HDR -> display value: divide by 2^ev, clamp to [0, 1], apply the curve.
double tonemap_forward(double hdr, double ev, const ResponseCurve& curve);
/// Display value in [0, 1] -> HDR (errors beyond 1e-12 outside the range).
double tonemap_inverse(double srgb, double ev, const ResponseCurve& curve);

std::vector<double> tonemap_forward(std::span<const double> hdr, double ev, const ResponseCurve& curve);
std::vector<double> tonemap_inverse(std::span<const double> srgb, double ev, const ResponseCurve& curve);

}  // namespace inpc
