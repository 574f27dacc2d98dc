// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

// Elementwise kernels over contiguous double buffers. Each operation has a
// scalar reference implementation plus SIMD variants (AVX2 on x86-64, NEON on
// aarch64) selected once at startup from CPU capabilities. Elementwise maps
// are bitwise identical across backends (single-rounded ops, no FMA
// contraction); reductions may differ across backends in the last bits from
// lane-accumulation order, but are deterministic for a fixed backend.
namespace cssl::kernels {

struct Backend {
  const char* name;

  // out[k] = a*x[k] + b*y[k]
  void (*lincomb2)(double* out, double a, const double* x, double b, const double* y,
                   std::size_t n);
  // out[k] = a*x[k] + b*y[k] + c*z[k]
  void (*lincomb3)(double* out, double a, const double* x, double b, const double* y,
                   double c, const double* z, std::size_t n);
  // y[k] += a*x[k]
  void (*axpy)(double* y, double a, const double* x, std::size_t n);
  // acc[k] = max(acc[k], |x[k]|)
  void (*acc_abs_max)(double* acc, const double* x, std::size_t n);
  // acc[k] += |x[k]|
  void (*acc_abs_add)(double* acc, const double* x, std::size_t n);
  // acc[k] += x[k]*x[k]
  void (*acc_square)(double* acc, const double* x, std::size_t n);
  // acc[k] += x[k]
  void (*acc_add)(double* acc, const double* x, std::size_t n);

  double (*sum_squares)(const double* x, std::size_t n);
  double (*sum_squares_diff)(const double* x, const double* y, std::size_t n);
  double (*abs_sum)(const double* x, std::size_t n);
  double (*abs_max)(const double* x, std::size_t n);
};

const Backend& scalar_backend();
const Backend* avx2_backend();  // nullptr when not compiled in or unsupported
const Backend* neon_backend();  // nullptr when not compiled in

// Runtime-selected backend. Defaults to the widest supported SIMD variant.
const Backend& active();

// Override the selection (tests); nullptr restores automatic choice.
void set_backend(const Backend* b);

}  // namespace cssl::kernels
