// SPDX-License-Identifier: Apache-2.0
//
// AVX2 kernels. No FMA is used anywhere (and the TU is built with
// -ffp-contract=off) so every elementwise result is the same sequence of
// individually rounded ops as the scalar reference, hence bitwise equal.

#include "cssl/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

#include <cmath>

namespace cssl::kernels {
namespace {

inline __m256d vabs(__m256d v) {
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  return _mm256_and_pd(v, mask);
}

void v_lincomb2(double* out, double a, const double* x, double b, const double* y,
                std::size_t n) {
  const __m256d va = _mm256_set1_pd(a), vb = _mm256_set1_pd(b);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d r = _mm256_add_pd(_mm256_mul_pd(va, _mm256_loadu_pd(x + k)),
                              _mm256_mul_pd(vb, _mm256_loadu_pd(y + k)));
    _mm256_storeu_pd(out + k, r);
  }
  for (; k < n; ++k) out[k] = a * x[k] + b * y[k];
}

void v_lincomb3(double* out, double a, const double* x, double b, const double* y,
                double c, const double* z, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a), vb = _mm256_set1_pd(b), vc = _mm256_set1_pd(c);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d r = _mm256_add_pd(
        _mm256_add_pd(_mm256_mul_pd(va, _mm256_loadu_pd(x + k)),
                      _mm256_mul_pd(vb, _mm256_loadu_pd(y + k))),
        _mm256_mul_pd(vc, _mm256_loadu_pd(z + k)));
    _mm256_storeu_pd(out + k, r);
  }
  for (; k < n; ++k) out[k] = a * x[k] + b * y[k] + c * z[k];
}

void v_axpy(double* y, double a, const double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d r = _mm256_add_pd(_mm256_loadu_pd(y + k),
                              _mm256_mul_pd(va, _mm256_loadu_pd(x + k)));
    _mm256_storeu_pd(y + k, r);
  }
  for (; k < n; ++k) y[k] += a * x[k];
}

void v_acc_abs_max(double* acc, const double* x, std::size_t n) {
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d r = _mm256_max_pd(_mm256_loadu_pd(acc + k), vabs(_mm256_loadu_pd(x + k)));
    _mm256_storeu_pd(acc + k, r);
  }
  for (; k < n; ++k) acc[k] = std::max(acc[k], std::fabs(x[k]));
}

void v_acc_abs_add(double* acc, const double* x, std::size_t n) {
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d r = _mm256_add_pd(_mm256_loadu_pd(acc + k), vabs(_mm256_loadu_pd(x + k)));
    _mm256_storeu_pd(acc + k, r);
  }
  for (; k < n; ++k) acc[k] += std::fabs(x[k]);
}

void v_acc_square(double* acc, const double* x, std::size_t n) {
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d v = _mm256_loadu_pd(x + k);
    __m256d r = _mm256_add_pd(_mm256_loadu_pd(acc + k), _mm256_mul_pd(v, v));
    _mm256_storeu_pd(acc + k, r);
  }
  for (; k < n; ++k) acc[k] += x[k] * x[k];
}

void v_acc_add(double* acc, const double* x, std::size_t n) {
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d r = _mm256_add_pd(_mm256_loadu_pd(acc + k), _mm256_loadu_pd(x + k));
    _mm256_storeu_pd(acc + k, r);
  }
  for (; k < n; ++k) acc[k] += x[k];
}

// Horizontal reduction order is pinned: lane0..lane3, then the tail terms.
inline double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return ((lanes[0] + lanes[1]) + lanes[2]) + lanes[3];
}

double v_sum_squares(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d v = _mm256_loadu_pd(x + k);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  double s = hsum(acc);
  for (; k < n; ++k) s += x[k] * x[k];
  return s;
}

double v_sum_squares_diff(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double s = hsum(acc);
  for (; k < n; ++k) {
    const double d = x[k] - y[k];
    s += d * d;
  }
  return s;
}

double v_abs_sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) acc = _mm256_add_pd(acc, vabs(_mm256_loadu_pd(x + k)));
  double s = hsum(acc);
  for (; k < n; ++k) s += std::fabs(x[k]);
  return s;
}

double v_abs_max(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) acc = _mm256_max_pd(acc, vabs(_mm256_loadu_pd(x + k)));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double m = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
  for (; k < n; ++k) m = std::max(m, std::fabs(x[k]));
  return m;
}

const Backend kAvx2 = {
    "avx2",       v_lincomb2,   v_lincomb3,       v_axpy,      v_acc_abs_max,
    v_acc_abs_add, v_acc_square, v_acc_add,        v_sum_squares,
    v_sum_squares_diff, v_abs_sum, v_abs_max,
};

}  // namespace

const Backend* avx2_backend_impl() { return &kAvx2; }

}  // namespace cssl::kernels

#endif  // __AVX2__
