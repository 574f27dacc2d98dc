// SPDX-License-Identifier: Apache-2.0
//
// Backend equivalence: every SIMD variant must match the scalar reference
// bitwise on elementwise maps and to tight relative tolerance on reductions.

#include <doctest.h>

#include <cmath>
#include <vector>

#include "cssl/kernels.hpp"
#include "cssl/rng.hpp"

using namespace cssl;

namespace {

std::vector<double> random_buffer(std::size_t n, Rng& rng, double scale = 3.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * (rng.uniform() - 0.5);
  return v;
}

std::vector<const kernels::Backend*> simd_backends() {
  std::vector<const kernels::Backend*> out;
  if (const auto* b = kernels::avx2_backend()) out.push_back(b);
  if (const auto* b = kernels::neon_backend()) out.push_back(b);
  return out;
}

}  // namespace

TEST_CASE("elementwise kernels match the scalar reference bitwise") {
  Rng rng(11);
  const auto& ref = kernels::scalar_backend();
  for (const auto* simd : simd_backends()) {
    CAPTURE(simd->name);
    // sizes around the vector width cover remainder-loop paths
    for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 16, 33, 1024, 1027}) {
      const auto x = random_buffer(n, rng), y = random_buffer(n, rng),
                 z = random_buffer(n, rng);
      const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2),
                   c = rng.uniform(-2, 2);

      std::vector<double> r1(n), r2(n);
      ref.lincomb2(r1.data(), a, x.data(), b, y.data(), n);
      simd->lincomb2(r2.data(), a, x.data(), b, y.data(), n);
      CHECK(r1 == r2);

      ref.lincomb3(r1.data(), a, x.data(), b, y.data(), c, z.data(), n);
      simd->lincomb3(r2.data(), a, x.data(), b, y.data(), c, z.data(), n);
      CHECK(r1 == r2);

      r1 = y;
      r2 = y;
      ref.axpy(r1.data(), a, x.data(), n);
      simd->axpy(r2.data(), a, x.data(), n);
      CHECK(r1 == r2);

      for (auto acc : {&kernels::Backend::acc_abs_max, &kernels::Backend::acc_abs_add,
                       &kernels::Backend::acc_square, &kernels::Backend::acc_add}) {
        r1 = z;
        r2 = z;
        (ref.*acc)(r1.data(), x.data(), n);
        ((*simd).*acc)(r2.data(), x.data(), n);
        CHECK(r1 == r2);
      }
    }
  }
}

TEST_CASE("reductions agree across backends to relative 1e-13") {
  Rng rng(12);
  const auto& ref = kernels::scalar_backend();
  for (const auto* simd : simd_backends()) {
    CAPTURE(simd->name);
    for (std::size_t n : {1, 5, 64, 1023, 4096}) {
      const auto x = random_buffer(n, rng), y = random_buffer(n, rng);
      const double tol = 1e-13 * static_cast<double>(n);
      CHECK(std::fabs(ref.sum_squares(x.data(), n) - simd->sum_squares(x.data(), n)) <=
            tol * ref.sum_squares(x.data(), n) + 1e-300);
      CHECK(std::fabs(ref.sum_squares_diff(x.data(), y.data(), n) -
                      simd->sum_squares_diff(x.data(), y.data(), n)) <=
            tol * (ref.sum_squares_diff(x.data(), y.data(), n) + 1.0));
      CHECK(std::fabs(ref.abs_sum(x.data(), n) - simd->abs_sum(x.data(), n)) <=
            tol * ref.abs_sum(x.data(), n) + 1e-300);
      // max has a unique exact answer
      CHECK(ref.abs_max(x.data(), n) == simd->abs_max(x.data(), n));
    }
  }
}

TEST_CASE("active backend is one of the known implementations") {
  const auto& b = kernels::active();
  const std::string name = b.name;
  CHECK((name == "scalar" || name == "avx2" || name == "neon"));
  // forcing the scalar backend must take effect and be reversible
  kernels::set_backend(&kernels::scalar_backend());
  CHECK(std::string(kernels::active().name) == "scalar");
  kernels::set_backend(nullptr);
  CHECK(std::string(kernels::active().name) == name);
}
