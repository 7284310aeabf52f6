#pragma once

#include <span>
#include <vector>

#include "inpc/math.hpp"
#include "inpc/scene.hpp"

namespace inpc::kernels {

enum class SimdLevel { Scalar, Avx2 };

const char* to_string(SimdLevel level);
/// Best level supported by both the build and the running CPU.
SimdLevel detected_simd_level();
/// Level used by the batch kernels; starts at detected_simd_level() unless INPC_SIMD=scalar.
SimdLevel active_simd_level();
/// Requests a level; requests above detected_simd_level() are clamped.
void set_simd_level(SimdLevel level);

class ScopedSimdLevel {
 public:
  explicit ScopedSimdLevel(SimdLevel level) : previous_(active_simd_level()) { set_simd_level(level); }
  ~ScopedSimdLevel() { set_simd_level(previous_); }
  ScopedSimdLevel(const ScopedSimdLevel&) = delete;
  ScopedSimdLevel& operator=(const ScopedSimdLevel&) = delete;

 private:
  SimdLevel previous_;
};

/// Spherical contraction: identity inside the unit ball, (2 - 1/|x|) x/|x| outside.
inline Vec3 contract(const Vec3& x) {
  const double n2 = dot(x, x);
  if (n2 <= 1.0) return x;
  const double n = std::sqrt(n2);
  return x * ((2.0 - 1.0 / n) / n);
}

void contract_batch(std::span<const Vec3> in, std::span<Vec3> out);

struct LossResult {
  double loss = 0;
  std::vector<double> gradient;
};

struct CauchyOptions {
  double scale = 1.0;
};

/// Mean of log1p(0.5 (x/c)^2) with its gradient 2x / (2c^2 + x^2) / N.
LossResult cauchy_loss(std::span<const double> residuals, CauchyOptions options = {});

/// grads[i] += lambda * 2 w[i] / N without evaluating the decay loss.
void add_weight_decay_grad(std::span<const double> weights, std::span<double> grads, double lambda);

/// Evaluates degree-2 SH for many points: out[i] = eval(coeffs[i], dirs[i]); dirs must be unit length.
void eval_sh_batch(std::span<const ShBlock> coeffs, std::span<const Vec3> dirs, std::span<Feature4> out);

namespace detail {

// Per-level implementations, exposed for equivalence tests.
struct KernelTable {
  void (*contract)(const Vec3* in, Vec3* out, std::size_t n);
  double (*cauchy)(const double* x, double* grad, std::size_t n, double scale);
  void (*weight_decay)(const double* w, double* g, std::size_t n, double lambda);
  void (*eval_sh)(const ShBlock* coeffs, const Vec3* dirs, Feature4* out, std::size_t n);
};

const KernelTable& scalar_table();
/// Null when the build has no AVX2 kernels.
const KernelTable* avx2_table();
const KernelTable& table_for(SimdLevel level);

}  // namespace detail
}  // namespace inpc::kernels
