// AVX2/FMA variants of the batch kernels. Functions carry a target attribute instead of the
// whole file being built with -mavx2, so no AVX code leaks into shared inline functions.

#include "inpc/kernels.hpp"

#if defined(INPC_HAVE_AVX2_KERNELS)

#include <immintrin.h>

#include <cmath>

#include "inpc/sh.hpp"

#define INPC_AVX2 __attribute__((target("avx2,fma")))

namespace inpc::kernels::detail {
namespace {

// Vec3 is three packed doubles; lane i of a 4-wide gather reads element 3*i.
INPC_AVX2 inline __m256i aos_stride3() { return _mm256_setr_epi64x(0, 3, 6, 9); }

INPC_AVX2 void contract_avx2(const Vec3* in, Vec3* out, std::size_t n) {
  static_assert(sizeof(Vec3) == 3 * sizeof(double));
  const __m256i idx = aos_stride3();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d two = _mm256_set1_pd(2.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double* base = reinterpret_cast<const double*>(in + i);
    const __m256d x = _mm256_i64gather_pd(base, idx, 8);
    const __m256d y = _mm256_i64gather_pd(base + 1, idx, 8);
    const __m256d z = _mm256_i64gather_pd(base + 2, idx, 8);
    const __m256d n2 = _mm256_fmadd_pd(x, x, _mm256_fmadd_pd(y, y, _mm256_mul_pd(z, z)));
    const __m256d len = _mm256_sqrt_pd(n2);
    const __m256d outside_scale = _mm256_div_pd(_mm256_sub_pd(two, _mm256_div_pd(one, len)), len);
    const __m256d inside = _mm256_cmp_pd(n2, one, _CMP_LE_OQ);
    const __m256d scale = _mm256_blendv_pd(outside_scale, one, inside);
    alignas(32) double sx[4], sy[4], sz[4];
    _mm256_store_pd(sx, _mm256_mul_pd(x, scale));
    _mm256_store_pd(sy, _mm256_mul_pd(y, scale));
    _mm256_store_pd(sz, _mm256_mul_pd(z, scale));
    for (int l = 0; l < 4; ++l) out[i + l] = Vec3{sx[l], sy[l], sz[l]};
  }
  for (; i < n; ++i) out[i] = contract(in[i]);
}

INPC_AVX2 double cauchy_avx2(const double* x, double* grad, std::size_t n, double scale) {
  const double inv_n = 1.0 / static_cast<double>(n);
  const __m256d two_c2 = _mm256_set1_pd(2.0 * scale * scale);
  const __m256d half_inv_c2 = _mm256_set1_pd(0.5 / (scale * scale));
  const __m256d two_inv_n = _mm256_set1_pd(2.0 * inv_n);
  __m256d lane_sum = _mm256_setzero_pd();
  alignas(32) double q[4];
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d v2 = _mm256_mul_pd(v, v);
    _mm256_storeu_pd(grad + i, _mm256_div_pd(_mm256_mul_pd(two_inv_n, v), _mm256_add_pd(two_c2, v2)));
    _mm256_store_pd(q, _mm256_mul_pd(v2, half_inv_c2));
    // No vector log1p in AVX2; keep the precise libm call per lane.
    lane_sum = _mm256_add_pd(lane_sum, _mm256_setr_pd(std::log1p(q[0]), std::log1p(q[1]), std::log1p(q[2]), std::log1p(q[3])));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, lane_sum);
  double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  const double inv_c2 = 1.0 / (scale * scale);
  for (; i < n; ++i) {
    sum += std::log1p(0.5 * x[i] * x[i] * inv_c2);
    grad[i] = 2.0 * x[i] / (2.0 * scale * scale + x[i] * x[i]) * inv_n;
  }
  return sum * inv_n;
}

INPC_AVX2 void weight_decay_avx2(const double* w, double* g, std::size_t n, double lambda) {
  const double k = 2.0 * lambda / static_cast<double>(n);
  const __m256d kv = _mm256_set1_pd(k);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(g + i, _mm256_fmadd_pd(kv, _mm256_loadu_pd(w + i), _mm256_loadu_pd(g + i)));
  for (; i < n; ++i) g[i] += k * w[i];
}

INPC_AVX2 void eval_sh_avx2(const ShBlock* coeffs, const Vec3* dirs, Feature4* out, std::size_t n) {
  const __m256i dir_idx = aos_stride3();
  const __m256i block_idx = _mm256_setr_epi64x(0, kShBlockSize, 2 * kShBlockSize, 3 * kShBlockSize);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double* d = reinterpret_cast<const double*>(dirs + i);
    const __m256d x = _mm256_i64gather_pd(d, dir_idx, 8);
    const __m256d y = _mm256_i64gather_pd(d + 1, dir_idx, 8);
    const __m256d z = _mm256_i64gather_pd(d + 2, dir_idx, 8);
    const __m256d c1 = _mm256_set1_pd(kShC1);
    const __m256d c2a = _mm256_set1_pd(kShC2a);
    __m256d basis[kShCoeffsPerChannel];
    basis[0] = _mm256_set1_pd(kShC0);
    basis[1] = _mm256_mul_pd(c1, y);
    basis[2] = _mm256_mul_pd(c1, z);
    basis[3] = _mm256_mul_pd(c1, x);
    basis[4] = _mm256_mul_pd(c2a, _mm256_mul_pd(x, y));
    basis[5] = _mm256_mul_pd(c2a, _mm256_mul_pd(y, z));
    basis[6] = _mm256_mul_pd(_mm256_set1_pd(kShC2b),
                             _mm256_sub_pd(_mm256_mul_pd(_mm256_set1_pd(3.0), _mm256_mul_pd(z, z)), _mm256_set1_pd(1.0)));
    basis[7] = _mm256_mul_pd(c2a, _mm256_mul_pd(x, z));
    basis[8] = _mm256_mul_pd(_mm256_set1_pd(kShC2c), _mm256_sub_pd(_mm256_mul_pd(x, x), _mm256_mul_pd(y, y)));
    const double* cbase = coeffs[i].data();
    alignas(32) double ch[kFeatureChannels][4];
    for (int c = 0; c < kFeatureChannels; ++c) {
      __m256d acc = _mm256_setzero_pd();
      for (int j = 0; j < kShCoeffsPerChannel; ++j) {
        const __m256d k = _mm256_i64gather_pd(cbase + c * kShCoeffsPerChannel + j, block_idx, 8);
        acc = _mm256_fmadd_pd(k, basis[j], acc);
      }
      _mm256_store_pd(ch[c], acc);
    }
    for (int l = 0; l < 4; ++l)
      for (int c = 0; c < kFeatureChannels; ++c) out[i + l][c] = ch[c][l];
  }
  if (i < n) scalar_table().eval_sh(coeffs + i, dirs + i, out + i, n - i);
}

}  // namespace

const KernelTable* avx2_table() {
  static constexpr KernelTable table{contract_avx2, cauchy_avx2, weight_decay_avx2, eval_sh_avx2};
  return &table;
}

}  // namespace inpc::kernels::detail

#else

namespace inpc::kernels::detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace inpc::kernels::detail

#endif
