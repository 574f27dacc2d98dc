// SPDX-License-Identifier: Apache-2.0
//
// NEON kernels (aarch64 baseline). Contraction-free like the scalar
// reference, so elementwise results are bitwise equal to it.

#include "cssl/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

namespace cssl::kernels {
namespace {

void v_lincomb2(double* out, double a, const double* x, double b, const double* y,
                std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a), vb = vdupq_n_f64(b);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    float64x2_t r = vaddq_f64(vmulq_f64(va, vld1q_f64(x + k)),
                              vmulq_f64(vb, vld1q_f64(y + k)));
    vst1q_f64(out + k, r);
  }
  for (; k < n; ++k) out[k] = a * x[k] + b * y[k];
}

void v_lincomb3(double* out, double a, const double* x, double b, const double* y,
                double c, const double* z, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a), vb = vdupq_n_f64(b), vc = vdupq_n_f64(c);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    float64x2_t r = vaddq_f64(vaddq_f64(vmulq_f64(va, vld1q_f64(x + k)),
                                        vmulq_f64(vb, vld1q_f64(y + k))),
                              vmulq_f64(vc, vld1q_f64(z + k)));
    vst1q_f64(out + k, r);
  }
  for (; k < n; ++k) out[k] = a * x[k] + b * y[k] + c * z[k];
}

void v_axpy(double* y, double a, const double* x, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    float64x2_t r = vaddq_f64(vld1q_f64(y + k), vmulq_f64(va, vld1q_f64(x + k)));
    vst1q_f64(y + k, r);
  }
  for (; k < n; ++k) y[k] += a * x[k];
}

void v_acc_abs_max(double* acc, const double* x, std::size_t n) {
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2)
    vst1q_f64(acc + k, vmaxq_f64(vld1q_f64(acc + k), vabsq_f64(vld1q_f64(x + k))));
  for (; k < n; ++k) acc[k] = std::max(acc[k], std::fabs(x[k]));
}

void v_acc_abs_add(double* acc, const double* x, std::size_t n) {
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2)
    vst1q_f64(acc + k, vaddq_f64(vld1q_f64(acc + k), vabsq_f64(vld1q_f64(x + k))));
  for (; k < n; ++k) acc[k] += std::fabs(x[k]);
}

void v_acc_square(double* acc, const double* x, std::size_t n) {
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    float64x2_t v = vld1q_f64(x + k);
    vst1q_f64(acc + k, vaddq_f64(vld1q_f64(acc + k), vmulq_f64(v, v)));
  }
  for (; k < n; ++k) acc[k] += x[k] * x[k];
}

void v_acc_add(double* acc, const double* x, std::size_t n) {
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2)
    vst1q_f64(acc + k, vaddq_f64(vld1q_f64(acc + k), vld1q_f64(x + k)));
  for (; k < n; ++k) acc[k] += x[k];
}

inline double hsum(float64x2_t v) { return vgetq_lane_f64(v, 0) + vgetq_lane_f64(v, 1); }

double v_sum_squares(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    float64x2_t v = vld1q_f64(x + k);
    acc = vaddq_f64(acc, vmulq_f64(v, v));
  }
  double s = hsum(acc);
  for (; k < n; ++k) s += x[k] * x[k];
  return s;
}

double v_sum_squares_diff(const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    float64x2_t d = vsubq_f64(vld1q_f64(x + k), vld1q_f64(y + k));
    acc = vaddq_f64(acc, vmulq_f64(d, d));
  }
  double s = hsum(acc);
  for (; k < n; ++k) {
    const double d = x[k] - y[k];
    s += d * d;
  }
  return s;
}

double v_abs_sum(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) acc = vaddq_f64(acc, vabsq_f64(vld1q_f64(x + k)));
  double s = hsum(acc);
  for (; k < n; ++k) s += std::fabs(x[k]);
  return s;
}

double v_abs_max(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) acc = vmaxq_f64(acc, vabsq_f64(vld1q_f64(x + k)));
  double m = std::max(vgetq_lane_f64(acc, 0), vgetq_lane_f64(acc, 1));
  for (; k < n; ++k) m = std::max(m, std::fabs(x[k]));
  return m;
}

const Backend kNeon = {
    "neon",       v_lincomb2,   v_lincomb3,       v_axpy,      v_acc_abs_max,
    v_acc_abs_add, v_acc_square, v_acc_add,        v_sum_squares,
    v_sum_squares_diff, v_abs_sum, v_abs_max,
};

}  // namespace

const Backend* neon_backend_impl() { return &kNeon; }

}  // namespace cssl::kernels

#endif  // __aarch64__
