// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cssl/types.hpp"

namespace cssl {

// Constraint set C = { u in R^N : |1^T u| <= rho, ||u||_q <= gamma } and its
// boundary pieces. gamma may be +inf, which drops the norm constraint.
struct ProjectionSpec {
  double rho = 0.0;
  double gamma = kInf;
  double q = 2.0;  // 1, 2 or inf

  static ProjectionSpec create(double rho, double gamma, double q);
};

bool in_constraint_set(const Vector& y, const ProjectionSpec& spec, double tol = 0.0);

// Euclidean projection onto C. Dispatch: interior -> identity; then the
// |1^T y| = rho piece, the ||y||_q = gamma piece, and finally their
// intersection when neither candidate is feasible.
Vector project_onto_C(const Vector& y0, const ProjectionSpec& spec);

// argmin ||y - y0|| s.t. |1^T y| = rho (closed form)
Vector project_sum_hyperplane(const Vector& y0, double rho);

// argmin ||y - y0|| s.t. ||y||_q = gamma (q=1 via the simplex knapsack on
// |y0|; q=2 radial scaling; q=inf the relaxed box projection)
Vector project_lq_ball_boundary(const Vector& y0, double gamma, double q);

// min 0.5*sum (z_i - a_i)^2  s.t.  z >= 0, 1^T z = gamma.
// Breakpoint sort, O(N log N).
Vector solve_cq_knapsack_simplex(const Vector& a, double gamma);

// min 0.5*||y - y0||^2  s.t.  1^T y = zeta, -gamma <= y_i <= gamma.
// 2N-breakpoint sort, O(N log N).
Vector solve_cq_knapsack_box(const Vector& y0, double zeta, double gamma);

// Projection onto { |1^T y| = rho, ||y||_q = gamma }. tilde_y is the
// sum-hyperplane solution for y0 (its signs restrict the q=1 search).
Vector project_intersection_boundary(const Vector& y0, const ProjectionSpec& spec,
                                     const Vector& tilde_y);

}  // namespace cssl
