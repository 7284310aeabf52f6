#include <atomic>
#include <cstdlib>
#include <cstring>

#include "inpc/error.hpp"
#include "inpc/kernels.hpp"

namespace inpc::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(INPC_HAVE_AVX2_KERNELS) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

SimdLevel initial_level() {
  const char* env = std::getenv("INPC_SIMD");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return SimdLevel::Scalar;
  return detected_simd_level();
}

std::atomic<SimdLevel>& level_storage() {
  static std::atomic<SimdLevel> level{initial_level()};
  return level;
}

const detail::KernelTable& active() { return detail::table_for(active_simd_level()); }

}  // namespace

const char* to_string(SimdLevel level) { return level == SimdLevel::Avx2 ? "avx2" : "scalar"; }

SimdLevel detected_simd_level() {
  static const SimdLevel level = (detail::avx2_table() != nullptr && cpu_has_avx2()) ? SimdLevel::Avx2 : SimdLevel::Scalar;
  return level;
}

SimdLevel active_simd_level() { return level_storage().load(std::memory_order_relaxed); }

void set_simd_level(SimdLevel level) {
  if (level == SimdLevel::Avx2 && detected_simd_level() != SimdLevel::Avx2) level = SimdLevel::Scalar;
  level_storage().store(level, std::memory_order_relaxed);
}

namespace detail {
const KernelTable& table_for(SimdLevel level) {
  if (level == SimdLevel::Avx2 && avx2_table() != nullptr) return *avx2_table();
  return scalar_table();
}
}  // namespace detail

void contract_batch(std::span<const Vec3> in, std::span<Vec3> out) {
  if (in.size() != out.size()) fail("contract_batch: size mismatch");
  active().contract(in.data(), out.data(), in.size());
}

LossResult cauchy_loss(std::span<const double> residuals, CauchyOptions options) {
  if (!(options.scale > 0)) fail("cauchy_loss: scale must be positive");
  LossResult out;
  out.gradient.resize(residuals.size());
  if (residuals.empty()) return out;
  out.loss = active().cauchy(residuals.data(), out.gradient.data(), residuals.size(), options.scale);
  return out;
}

void add_weight_decay_grad(std::span<const double> weights, std::span<double> grads, double lambda) {
  if (weights.size() != grads.size()) fail("add_weight_decay_grad: shape mismatch");
  if (weights.empty() || lambda == 0) return;
  active().weight_decay(weights.data(), grads.data(), weights.size(), lambda);
}

void eval_sh_batch(std::span<const ShBlock> coeffs, std::span<const Vec3> dirs, std::span<Feature4> out) {
  if (coeffs.size() != dirs.size() || coeffs.size() != out.size()) fail("eval_sh_batch: size mismatch");
  active().eval_sh(coeffs.data(), dirs.data(), out.data(), coeffs.size());
}

}  // namespace inpc::kernels
