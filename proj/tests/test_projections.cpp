// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "cssl/projections.hpp"
#include "cssl/rng.hpp"
#include "oracle_projection.hpp"

using namespace cssl;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

double q_from_draw(int k) { return k == 0 ? 1.0 : (k == 1 ? 2.0 : kInf); }

// Exhaustive nu line search over a 10^6-point grid to bracket the monotone
// crossing sum(z(nu)) = budget, then bisection to machine precision. No
// breakpoint sorting anywhere, so it stays independent of the production
// solvers.
template <class SumFn>
double grid_bisect_nu(SumFn sum_at, double budget, double lo, double hi) {
  const int grid = 1'000'000;
  double bracket_lo = lo, bracket_hi = hi;
  double prev_nu = lo, prev_sum = sum_at(lo);
  for (int g = 1; g <= grid; ++g) {
    const double nu = lo + (hi - lo) * g / grid;
    const double s = sum_at(nu);
    if (prev_sum >= budget && s <= budget) {
      bracket_lo = prev_nu;
      bracket_hi = nu;
      break;
    }
    prev_nu = nu;
    prev_sum = s;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (bracket_lo + bracket_hi);
    (sum_at(mid) > budget ? bracket_lo : bracket_hi) = mid;
  }
  return 0.5 * (bracket_lo + bracket_hi);
}

}  // namespace

TEST_CASE("sum-hyperplane projection closed cases") {
  CHECK((project_sum_hyperplane(vec({2, 2}), 2.0) - vec({1, 1})).cwiseAbs().maxCoeff() <=
        1e-15);
  const Vector y = project_sum_hyperplane(vec({-3, 0, 0}), 1.0);
  CHECK((y - vec({-3 + 2.0 / 3, 2.0 / 3, 2.0 / 3})).cwiseAbs().maxCoeff() <= 1e-12);
  Rng rng(21);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 5));
    Vector y0(n);
    for (int i = 0; i < n; ++i) y0[i] = 4.0 * rng.normal();
    const double rho = rng.uniform(0.0, 2.0);
    const Vector proj = project_sum_hyperplane(y0, rho);
    CHECK(std::fabs(std::fabs(proj.sum()) - rho) <= 1e-10);
    // KKT: the step is along the all-ones direction
    const Vector diff = proj - y0;
    CHECK((diff.array() - diff[0]).abs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("lq ball boundary closed cases") {
  CHECK((project_lq_ball_boundary(vec({3, 4}), 1.0, 2.0) - vec({0.6, 0.8}))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
  CHECK((project_lq_ball_boundary(vec({3, -0.5}), 1.0, kInf) - vec({1, -0.5}))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
  CHECK((project_lq_ball_boundary(vec({3, 1}), 2.0, 1.0) - vec({2, 0}))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(project_lq_ball_boundary(Vector::Zero(3), 1.0, 2.0),
                  std::domain_error);
}

TEST_CASE("simplex knapsack matches spec examples and the nu-grid oracle") {
  const Vector a1 = vec({2, 0, 0});
  CHECK((solve_cq_knapsack_simplex(a1, 2.0) - a1).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((solve_cq_knapsack_simplex(vec({3, 1}), 2.0) - vec({2, 0}))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
  CHECK((solve_cq_knapsack_simplex(vec({1, 1, 1}), 3.0) - vec({1, 1, 1}))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(solve_cq_knapsack_simplex(vec({1, 1}), 0.0), std::invalid_argument);

  Rng rng(22);
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform_int(0, 3));
    Vector a(n);
    for (int i = 0; i < n; ++i) a[i] = std::fabs(2.0 * rng.normal());
    const double gamma = rng.uniform(0.1, 1.5) * std::max(a.sum(), 0.5);
    const Vector z = solve_cq_knapsack_simplex(a, gamma);
    CHECK(z.minCoeff() >= 0.0);
    CHECK(std::fabs(z.sum() - gamma) <= 1e-9);
    auto sum_at = [&](double nu) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += std::max(a[i] - nu, 0.0);
      return s;
    };
    const double nu = grid_bisect_nu(sum_at, gamma, a.minCoeff() - gamma - 1.0,
                                     a.maxCoeff() + 1.0);
    Vector z_grid(n);
    for (int i = 0; i < n; ++i) z_grid[i] = std::max(a[i] - nu, 0.0);
    CHECK((z - z_grid).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(std::fabs((z - a).squaredNorm() - (z_grid - a).squaredNorm()) <= 1e-6);
  }
}

TEST_CASE("box knapsack matches spec examples and a nu-grid oracle") {
  CHECK((solve_cq_knapsack_box(vec({2, 0}), 1.0, 1.5) - vec({1.5, -0.5}))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
  const Vector feas = vec({0.5, -0.25});
  CHECK((solve_cq_knapsack_box(feas, 0.25, 1.0) - feas).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((solve_cq_knapsack_box(vec({0, 0, 0}), 3.0, 1.0) - vec({1, 1, 1}))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(solve_cq_knapsack_box(vec({0, 0}), 3.0, 1.0), std::domain_error);

  Rng rng(23);
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform_int(0, 3));
    Vector y0(n);
    for (int i = 0; i < n; ++i) y0[i] = 2.0 * rng.normal();
    const double gamma = rng.uniform(0.2, 2.0);
    const double zeta = rng.uniform(-0.95, 0.95) * n * gamma;
    const Vector y = solve_cq_knapsack_box(y0, zeta, gamma);
    CHECK(std::fabs(y.sum() - zeta) <= 1e-9);
    CHECK(y.cwiseAbs().maxCoeff() <= gamma + 1e-12);
    auto box_at = [&](double nu, int i) {
      const double r = y0[i] - nu;
      return (r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0)) * std::min(std::fabs(r), gamma);
    };
    auto sum_at = [&](double nu) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += box_at(nu, i);
      return s;
    };
    const double nu = grid_bisect_nu(sum_at, zeta, y0.minCoeff() - gamma - 1.0,
                                     y0.maxCoeff() + gamma + 1.0);
    Vector y_grid(n);
    for (int i = 0; i < n; ++i) y_grid[i] = box_at(nu, i);
    CHECK((y - y_grid).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(std::fabs((y - y0).squaredNorm() - (y_grid - y0).squaredNorm()) <= 1e-6);
  }
}

TEST_CASE("intersection boundary q=2 closed form vs angular grid") {
  // rho = 0 case from the closed form
  const Vector y0 = vec({3, 1});
  const double mu = y0.sum() / 2;
  Vector centered = y0.array() - mu;
  const Vector expect = (1.0 / centered.norm()) * centered;
  const ProjectionSpec spec0{0.0, 1.0, 2.0};
  CHECK((project_intersection_boundary(y0, spec0, project_sum_hyperplane(y0, 0.0)) -
         expect)
            .cwiseAbs()
            .maxCoeff() <= 1e-10);

  const ProjectionSpec spec{1.0, 1.0, 2.0};
  const Vector y0b = vec({10, 0});
  const Vector y = project_intersection_boundary(y0b, spec, project_sum_hyperplane(y0b, 1.0));
  CHECK(std::fabs(y.sum() - 1.0) <= 1e-9);
  CHECK(std::fabs(y.norm() - 1.0) <= 1e-9);
  double best = kInf;
  for (int g = 0; g <= 1'000'000; ++g) {
    const double th = 2.0 * M_PI * g / 1'000'000;
    const Vector cand = vec({std::cos(th), std::sin(th)});
    if (std::fabs(std::fabs(cand.sum()) - 1.0) > 2e-5) continue;
    best = std::min(best, (cand - y0b).squaredNorm());
  }
  CHECK((y - y0b).squaredNorm() <= best + 1e-4);

  CHECK_THROWS_AS(project_intersection_boundary(y0b, ProjectionSpec{10.0, 1.0, 2.0},
                                                project_sum_hyperplane(y0b, 10.0)),
                  std::domain_error);
}

TEST_CASE("intersection boundary q=inf example") {
  const ProjectionSpec spec{1.0, 2.0, kInf};
  const Vector y0 = vec({5, 5});
  const Vector y = project_intersection_boundary(y0, spec, project_sum_hyperplane(y0, 1.0));
  CHECK(std::fabs(std::fabs(y.sum()) - 1.0) <= 1e-9);
  CHECK(std::fabs(y.cwiseAbs().maxCoeff() - 2.0) <= 1e-9);
  CHECK(y.sum() == doctest::Approx(1.0));  // the zeta = +rho branch wins
}

TEST_CASE("project_onto_C: interior, table rows and 3000 randomized Dykstra checks") {
  const ProjectionSpec interior_spec{1.0, 1.0, 2.0};
  const Vector inside = vec({0.1, 0.1});
  CHECK((project_onto_C(inside, interior_spec) - inside).cwiseAbs().maxCoeff() == 0.0);
  CHECK((project_onto_C(vec({2, 2}), ProjectionSpec{2.0, 10.0, 2.0}) - vec({1, 1}))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);

  Rng rng(31);
  for (int qi = 0; qi < 3; ++qi) {
    const double q = q_from_draw(qi);
    for (int t = 0; t < 1000; ++t) {
      const int n = 2 + static_cast<int>(rng.uniform_int(0, 3));
      Vector y0(n);
      for (int i = 0; i < n; ++i) y0[i] = 3.0 * rng.normal();
      const double gamma = rng.uniform(0.1, 2.0);
      const double rho =
          rng.uniform(0.05, 1.0) * std::pow(n, 1.0 / ((q == 1.0) ? kInf
                                                       : (q == 2.0 ? 2.0 : 1.0))) *
          gamma;
      const ProjectionSpec spec{rho, gamma, q};
      const Vector mine = project_onto_C(y0, spec);
      CHECK(std::fabs(mine.sum()) <= rho + 1e-9);
      CHECK(lp_norm(mine, q) <= gamma + 1e-9);
      const Vector oracle = test_oracle::dykstra_project(y0, rho, gamma, q);
      CHECK((mine - y0).squaredNorm() <= (oracle - y0).squaredNorm() + 1e-6);
      // idempotence
      CHECK((project_onto_C(mine, spec) - mine).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("projection is nonexpansive") {
  Rng rng(33);
  for (int t = 0; t < 300; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform_int(0, 3));
    const double q = q_from_draw(static_cast<int>(rng.uniform_int(0, 2)));
    const ProjectionSpec spec{rng.uniform(0.05, 1.0), rng.uniform(0.1, 2.0), q};
    Vector a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = 3.0 * rng.normal();
      b[i] = 3.0 * rng.normal();
    }
    CHECK((project_onto_C(a, spec) - project_onto_C(b, spec)).norm() <=
          (a - b).norm() + 1e-12);
  }
}

TEST_CASE("theorem-4 sign property for q=1 intersection solutions") {
  Rng rng(34);
  int hit = 0;
  for (int t = 0; t < 2000; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform_int(0, 3));
    Vector y0(n);
    for (int i = 0; i < n; ++i) y0[i] = 3.0 * rng.normal();
    const double gamma = rng.uniform(0.1, 1.0);
    const double rho = rng.uniform(0.05, 0.95) * gamma;
    const ProjectionSpec spec{rho, gamma, 1.0};
    const Vector tilde = project_sum_hyperplane(y0, rho);
    if (lp_norm(tilde, 1.0) <= gamma) continue;  // dC1 feasible, dC3 not reached
    const Vector cand2 = project_lq_ball_boundary(y0, gamma, 1.0);
    if (std::fabs(cand2.sum()) <= rho) continue;
    const Vector y = project_intersection_boundary(y0, spec, tilde);
    ++hit;
    for (int i = 0; i < n; ++i) CHECK(tilde[i] * y[i] >= -1e-12);
    CHECK(std::fabs(std::fabs(y.sum()) - rho) <= 1e-9);
    CHECK(std::fabs(lp_norm(y, 1.0) - gamma) <= 1e-9);
  }
  CHECK(hit > 50);  // the dC3 branch was actually exercised
}

TEST_CASE("gamma = inf reduces the set to the slab") {
  const ProjectionSpec spec{0.5, kInf, 2.0};
  const Vector y0 = vec({4, -1});
  const Vector y = project_onto_C(y0, spec);
  CHECK(std::fabs(y.sum()) <= 0.5 + 1e-12);
  CHECK((y - test_oracle::project_slab(y0, 0.5)).cwiseAbs().maxCoeff() <= 1e-12);
}
