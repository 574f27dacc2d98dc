// SPDX-License-Identifier: Apache-2.0
//
// Test-only oracles for the projection kernels. Everything here is
// independent of the production code paths: the l1-ball projection runs on
// bisection (not the breakpoint sort), and the set projection runs Dykstra's
// alternating scheme on the two elementary sets.
#pragma once

#include <cmath>

#include "cssl/types.hpp"

namespace cssl::test_oracle {

inline Vector project_slab(const Vector& y, double rho) {
  const double s = y.sum();
  if (std::fabs(s) <= rho) return y;
  const double target = s > 0.0 ? rho : -rho;
  return y.array() - (s - target) / y.size();
}

inline Vector project_lq_ball(const Vector& y, double gamma, double q) {
  if (q == kInf) {
    Vector out = y;
    for (int i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], -gamma, gamma);
    return out;
  }
  if (q == 2.0) {
    const double n = y.norm();
    return n <= gamma ? y : Vector((gamma / n) * y);
  }
  // q = 1 via bisection on the soft threshold
  if (y.cwiseAbs().sum() <= gamma) return y;
  double lo = 0.0, hi = y.cwiseAbs().maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    double s = 0.0;
    for (int i = 0; i < y.size(); ++i) s += std::max(std::fabs(y[i]) - mid, 0.0);
    (s > gamma ? lo : hi) = mid;
  }
  const double tau = 0.5 * (lo + hi);
  Vector out(y.size());
  for (int i = 0; i < y.size(); ++i) {
    const double mag = std::max(std::fabs(y[i]) - tau, 0.0);
    out[i] = (y[i] < 0.0 ? -1.0 : 1.0) * mag;
  }
  return out;
}

// Dykstra's algorithm for the intersection of the slab and the lq ball;
// converges to the exact Euclidean projection for convex sets.
inline Vector dykstra_project(const Vector& y0, double rho, double gamma, double q,
                              int max_iter = 200000, double tol = 1e-13) {
  Vector x = y0;
  Vector p = Vector::Zero(y0.size()), r = Vector::Zero(y0.size());
  for (int it = 0; it < max_iter; ++it) {
    const Vector y = project_slab(x + p, rho);
    const Vector p_new = x + p - y;
    const Vector x_new = (gamma == kInf) ? y : project_lq_ball(y + r, gamma, q);
    const Vector r_new = y + r - x_new;
    const double delta = (p_new - p).squaredNorm() + (r_new - r).squaredNorm();
    p = p_new;
    r = r_new;
    x = x_new;
    if (delta < tol * tol) break;
  }
  return x;
}

}  // namespace cssl::test_oracle
