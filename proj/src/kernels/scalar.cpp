#include <cmath>

#include "inpc/kernels.hpp"
#include "inpc/sh.hpp"

namespace inpc::kernels::detail {
namespace {

void contract_scalar(const Vec3* in, Vec3* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = contract(in[i]);
}

double cauchy_scalar(const double* x, double* grad, std::size_t n, double scale) {
  const double inv_c2 = 1.0 / (scale * scale);
  const double two_c2 = 2.0 * scale * scale;
  const double inv_n = 1.0 / static_cast<double>(n);
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += std::log1p(0.5 * x[i] * x[i] * inv_c2);
    grad[i] = 2.0 * x[i] / (two_c2 + x[i] * x[i]) * inv_n;
  }
  return sum * inv_n;
}

void weight_decay_scalar(const double* w, double* g, std::size_t n, double lambda) {
  const double k = 2.0 * lambda / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) g[i] += k * w[i];
}

void eval_sh_scalar(const ShBlock* coeffs, const Vec3* dirs, Feature4* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const auto basis = sh_basis(dirs[i]);
    for (int c = 0; c < kFeatureChannels; ++c) {
      double acc = 0;
      for (int j = 0; j < kShCoeffsPerChannel; ++j) acc += coeffs[i][c * kShCoeffsPerChannel + j] * basis[j];
      out[i][c] = acc;
    }
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static constexpr KernelTable table{contract_scalar, cauchy_scalar, weight_decay_scalar, eval_sh_scalar};
  return table;
}

}  // namespace inpc::kernels::detail
