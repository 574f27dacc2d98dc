// SPDX-License-Identifier: Apache-2.0
//
// Scalar reference kernels. Compiled with -ffp-contract=off so that the SIMD
// variants (also contraction-free) produce bitwise-identical elementwise
// results.

#include "cssl/kernels.hpp"

#include <cmath>

namespace cssl::kernels {
namespace {

void s_lincomb2(double* out, double a, const double* x, double b, const double* y,
                std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = a * x[k] + b * y[k];
}

void s_lincomb3(double* out, double a, const double* x, double b, const double* y,
                double c, const double* z, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = a * x[k] + b * y[k] + c * z[k];
}

void s_axpy(double* y, double a, const double* x, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += a * x[k];
}

void s_acc_abs_max(double* acc, const double* x, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) acc[k] = std::max(acc[k], std::fabs(x[k]));
}

void s_acc_abs_add(double* acc, const double* x, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) acc[k] += std::fabs(x[k]);
}

void s_acc_square(double* acc, const double* x, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) acc[k] += x[k] * x[k];
}

void s_acc_add(double* acc, const double* x, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) acc[k] += x[k];
}

double s_sum_squares(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += x[k] * x[k];
  return s;
}

double s_sum_squares_diff(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = x[k] - y[k];
    s += d * d;
  }
  return s;
}

double s_abs_sum(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::fabs(x[k]);
  return s;
}

double s_abs_max(const double* x, std::size_t n) {
  double m = 0.0;
  for (std::size_t k = 0; k < n; ++k) m = std::max(m, std::fabs(x[k]));
  return m;
}

const Backend kScalar = {
    "scalar",     s_lincomb2,   s_lincomb3,       s_axpy,      s_acc_abs_max,
    s_acc_abs_add, s_acc_square, s_acc_add,        s_sum_squares,
    s_sum_squares_diff, s_abs_sum, s_abs_max,
};

}  // namespace

const Backend& scalar_backend() { return kScalar; }

}  // namespace cssl::kernels
