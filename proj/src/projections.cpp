// SPDX-License-Identifier: Apache-2.0

#include "cssl/projections.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cssl {

namespace {

// rounding slack when deciding whether a boundary candidate already lies in C
constexpr double kCornerTol = 1e-12;

double sgn(double a) { return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0); }

// Simplex knapsack core; accepts arbitrary real targets (the sign-split
// subproblems feed shifted values) and budget >= 0.
Vector knapsack_simplex_core(const Vector& a, double budget) {
  const int n = static_cast<int>(a.size());
  if (budget == 0.0) return Vector::Zero(n);
  // z_i(nu) = max(a_i - nu, 0); 1^T z(nu) is decreasing piecewise linear with
  // breakpoints a_i. Walk the sorted breakpoints and keep the last candidate
  // nu that stays below its own breakpoint; monotonicity makes this exact,
  // including nu < min(a_i) when the budget exceeds the total mass. Ties are
  // resolved by sort order; any consistent order gives the same nu.
  std::vector<double> u(a.data(), a.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double prefix = 0.0;
  double nu = u[0] - budget;  // k = 0 candidate, always valid
  for (int k = 0; k < n; ++k) {
    prefix += u[k];
    const double cand = (prefix - budget) / (k + 1);
    if (u[k] - cand > 0.0)
      nu = cand;
    else
      break;
  }
  Vector z(n);
  for (int i = 0; i < n; ++i) z[i] = std::max(a[i] - nu, 0.0);
  return z;
}

}  // namespace

ProjectionSpec ProjectionSpec::create(double rho, double gamma, double q) {
  if (!(rho >= 0.0)) throw std::invalid_argument("projection: rho >= 0 required");
  if (!(gamma > 0.0)) throw std::invalid_argument("projection: gamma > 0 required");
  if (q != 1.0 && q != 2.0 && q != kInf)
    throw std::invalid_argument("projection: q must be 1, 2 or inf");
  return ProjectionSpec{rho, gamma, q};
}

bool in_constraint_set(const Vector& y, const ProjectionSpec& spec, double tol) {
  if (std::fabs(y.sum()) > spec.rho + tol) return false;
  if (spec.gamma == kInf) return true;
  return lp_norm(y, spec.q) <= spec.gamma + tol;
}

Vector project_sum_hyperplane(const Vector& y0, double rho) {
  const double s = y0.sum();
  // at the exact center both hyperplanes are equidistant; take the + side
  const double sign = (s == 0.0) ? 1.0 : sgn(s);
  const double shift = (s - rho * sign) / static_cast<double>(y0.size());
  return y0.array() - shift;
}

Vector solve_cq_knapsack_simplex(const Vector& a, double gamma) {
  if (!(gamma > 0.0))
    throw std::invalid_argument("knapsack (simplex): gamma > 0 required");
  return knapsack_simplex_core(a, gamma);
}

Vector project_lq_ball_boundary(const Vector& y0, double gamma, double q) {
  if (!(gamma > 0.0)) throw std::invalid_argument("ball boundary: gamma > 0 required");
  const int n = static_cast<int>(y0.size());
  if (q == 2.0) {
    const double norm = y0.norm();
    if (norm == 0.0)
      throw std::domain_error("ball boundary: projection of 0 onto an l2 sphere is undefined");
    return (gamma / norm) * y0;
  }
  if (q == kInf) {
    Vector y(n);
    for (int i = 0; i < n; ++i) y[i] = sgn(y0[i]) * std::min(std::fabs(y0[i]), gamma);
    return y;
  }
  // q = 1: solve the knapsack on |y0| and restore signs; zero entries take +.
  Vector a = y0.cwiseAbs();
  Vector z = knapsack_simplex_core(a, gamma);
  Vector y(n);
  for (int i = 0; i < n; ++i) y[i] = (y0[i] < 0.0 ? -1.0 : 1.0) * z[i];
  return y;
}

Vector solve_cq_knapsack_box(const Vector& y0, double zeta, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("knapsack (box): gamma > 0 required");
  const int n = static_cast<int>(y0.size());
  if (std::fabs(zeta) > n * gamma + 1e-12)
    throw std::domain_error("knapsack (box): |zeta| > N*gamma is infeasible");
  if (zeta >= n * gamma - 1e-12) return Vector::Constant(n, gamma);
  if (zeta <= -n * gamma + 1e-12) return Vector::Constant(n, -gamma);

  auto clamp_at = [&](double nu, int i) {
    const double r = y0[i] - nu;
    return sgn(r) * std::min(std::fabs(r), gamma);
  };
  auto sum_at = [&](double nu) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += clamp_at(nu, i);
    return s;
  };

  // 1^T y(nu) is decreasing piecewise linear with breakpoints y0_i +- gamma.
  // Find the first sorted breakpoint whose sum has dropped to <= zeta; the
  // crossing lies in the segment just before it. The active sets are
  // classified at the segment midpoint, which keeps entries sitting exactly
  // on a breakpoint out of the ambiguous boundary.
  std::vector<double> bp;
  bp.reserve(2 * n);
  for (int i = 0; i < n; ++i) {
    bp.push_back(y0[i] - gamma);
    bp.push_back(y0[i] + gamma);
  }
  std::sort(bp.begin(), bp.end());
  std::size_t hit = bp.size() - 1;
  for (std::size_t k = 0; k < bp.size(); ++k)
    if (sum_at(bp[k]) <= zeta) {
      hit = k;
      break;
    }
  double nu;
  if (hit == 0) {
    nu = bp[0];  // zeta equals the flat upper plateau, handled above in exact cases
  } else {
    const double lo = bp[hit - 1], hi = bp[hit];
    if (hi - lo < 1e-300) {
      nu = hi;
    } else {
      const double mid = 0.5 * (lo + hi);
      std::vector<int> i2;
      int n1 = 0, n3 = 0;
      double sum2 = 0.0;
      for (int i = 0; i < n; ++i) {
        const double r = y0[i] - mid;
        if (r >= gamma) {
          ++n1;
        } else if (r >= -gamma) {
          i2.push_back(i);
          sum2 += y0[i];
        } else {
          ++n3;
        }
      }
      if (i2.empty()) {
        nu = mid;  // flat segment; continuity forces sum == zeta on it
      } else {
        nu = (sum2 + gamma * (n1 - n3) - zeta) / static_cast<double>(i2.size());
        nu = std::clamp(nu, lo, hi);
      }
    }
  }
  Vector y(n);
  for (int i = 0; i < n; ++i) y[i] = clamp_at(nu, i);
  return y;
}

Vector project_intersection_boundary(const Vector& y0, const ProjectionSpec& spec,
                                     const Vector& tilde_y) {
  const int n = static_cast<int>(y0.size());
  const double rho = spec.rho, gamma = spec.gamma, q = spec.q;
  if (gamma == kInf)
    throw std::domain_error("intersection boundary: gamma must be finite");
  const double p_conj = (q == 1.0) ? kInf : (q == 2.0 ? 2.0 : 1.0);
  const double limit = (p_conj == kInf)
                           ? gamma
                           : std::pow(static_cast<double>(n), 1.0 / p_conj) * gamma;
  if (rho > limit + 1e-12)
    throw std::domain_error(
        "intersection boundary: rho > N^{1/p}gamma, the intersection is empty");

  if (q == 2.0) {
    const double s = y0.sum();
    const double v = y0.squaredNorm();
    const double denom = gamma * gamma * n - rho * rho;
    if (rho < 1e-300 || denom <= 0.0) {
      // rho = 0 (or the degenerate rho = sqrt(N) gamma corner): center the
      // vector and scale onto the sphere
      const double mu = s / n;
      Vector w = y0.array() - mu;
      const double wn = w.norm();
      if (wn < 1e-300) {
        // y0 proportional to 1: any feasible point is equidistant; pick the
        // deterministic one in the plane spanned by e1 - e2
        Vector y = Vector::Constant(n, (rho == 0.0 ? 0.0 : sgn(s) * rho) / n);
        if (n >= 2) {
          const double r2 = gamma * gamma - y.squaredNorm();
          const double r = std::sqrt(std::max(r2, 0.0) / 2.0);
          y[0] += r;
          y[1] -= r;
        }
        return y;
      }
      if (rho < 1e-300) return (gamma / wn) * w;
      // fall through for the corner case with mu from the rho = 0 formula
      Vector y = Vector::Constant(n, sgn(s) * rho / n);
      Vector dir = w / wn;
      const double r = std::sqrt(std::max(gamma * gamma - rho * rho / n, 0.0));
      return y + r * dir;
    }
    const double tau = rho * rho * (n * v - s * s) / denom;
    if (tau < 1e-300) {
      // y0 proportional to 1 (Cauchy equality); same degenerate handling
      Vector y = Vector::Constant(n, sgn(s == 0.0 ? 1.0 : s) * rho / n);
      if (n >= 2) {
        const double r2 = gamma * gamma - rho * rho / n;
        const double r = std::sqrt(std::max(r2, 0.0) / 2.0);
        y[0] += r;
        y[1] -= r;
      }
      return y;
    }
    const double sign = (s == 0.0) ? 1.0 : sgn(s);
    const double mu = (s - sign * std::sqrt(tau)) / n;
    return sign * rho / (s - n * mu) * (y0.array() - mu).matrix();
  }

  if (q == kInf) {
    // The box relaxation of A.7 can come back strictly inside the sup-norm
    // sphere (that solution belongs to the sum-hyperplane piece instead). In
    // that case the norm equality is restored by pinning one coordinate at
    // +-gamma and re-solving the box problem over the rest.
    Vector best;
    double best_obj = kInf;
    auto consider = [&](Vector y) {
      const double obj = (y - y0).squaredNorm();
      if (obj < best_obj) {
        best_obj = obj;
        best = std::move(y);
      }
    };
    for (double zeta : {rho, -rho}) {
      Vector relaxed = solve_cq_knapsack_box(y0, zeta, gamma);
      if (relaxed.cwiseAbs().maxCoeff() >= gamma * (1.0 - 1e-12)) {
        consider(std::move(relaxed));
      } else {
        for (int pin = 0; pin < n; ++pin)
          for (double s : {gamma, -gamma}) {
            const double rest_budget = zeta - s;
            if (n == 1) {
              if (std::fabs(rest_budget) < 1e-12) consider(Vector::Constant(1, s));
              continue;
            }
            if (std::fabs(rest_budget) > (n - 1) * gamma + 1e-12) continue;
            Vector sub(n - 1);
            for (int i = 0, k = 0; i < n; ++i)
              if (i != pin) sub[k++] = y0[i];
            const Vector rest = solve_cq_knapsack_box(sub, rest_budget, gamma);
            Vector y(n);
            for (int i = 0, k = 0; i < n; ++i) y[i] = (i == pin) ? s : rest[k++];
            consider(std::move(y));
          }
      }
      if (rho == 0.0) break;
    }
    return best;
  }

  // q = 1: sign factorization from tilde_y (Theorem 4), then one simplex
  // knapsack per sign class and per zeta branch.
  std::vector<int> pos, neg;
  for (int i = 0; i < n; ++i) (tilde_y[i] >= 0.0 ? pos : neg).push_back(i);
  Vector best;
  double best_obj = kInf;
  for (double zeta : {rho, -rho}) {
    const double bp = 0.5 * (gamma + zeta);
    const double bn = 0.5 * (gamma - zeta);
    if (bp < -1e-15 || bn < -1e-15) continue;
    if ((pos.empty() && bp > 1e-15) || (neg.empty() && bn > 1e-15)) continue;
    Vector y = Vector::Zero(n);
    if (!pos.empty() && bp > 0.0) {
      Vector a(static_cast<int>(pos.size()));
      for (std::size_t k = 0; k < pos.size(); ++k) a[k] = y0[pos[k]];
      Vector z = knapsack_simplex_core(a, bp);
      for (std::size_t k = 0; k < pos.size(); ++k) y[pos[k]] = z[k];
    }
    if (!neg.empty() && bn > 0.0) {
      Vector a(static_cast<int>(neg.size()));
      for (std::size_t k = 0; k < neg.size(); ++k) a[k] = -y0[neg[k]];
      Vector z = knapsack_simplex_core(a, bn);
      for (std::size_t k = 0; k < neg.size(); ++k) y[neg[k]] = -z[k];
    }
    const double obj = (y - y0).squaredNorm();
    if (obj < best_obj) {
      best_obj = obj;
      best = std::move(y);
    }
    if (rho == 0.0) break;
  }
  if (best.size() == 0)
    throw std::domain_error("intersection boundary: no feasible sign branch");
  return best;
}

Vector project_onto_C(const Vector& y0, const ProjectionSpec& spec) {
  if (in_constraint_set(y0, spec)) return y0;
  // The projection lies on the boundary. If the hyperplane-pair minimizer is
  // feasible it dominates every sum-active point; if the sphere minimizer is
  // feasible it equals the projection whenever the slab is slack. When both
  // are feasible (boundary inputs) the objectives decide; when neither is,
  // both constraints are active.
  Vector cand1 = project_sum_hyperplane(y0, spec.rho);
  const bool ok1 =
      spec.gamma == kInf || lp_norm(cand1, spec.q) <= spec.gamma + kCornerTol;
  if (ok1 && spec.gamma == kInf) return cand1;
  Vector cand2 = project_lq_ball_boundary(y0, spec.gamma, spec.q);
  const bool ok2 = std::fabs(cand2.sum()) <= spec.rho + kCornerTol;
  if (ok1 && ok2)
    return (cand1 - y0).squaredNorm() <= (cand2 - y0).squaredNorm() ? cand1 : cand2;
  if (ok1) return cand1;
  if (ok2) return cand2;
  return project_intersection_boundary(y0, spec, cand1);
}

}  // namespace cssl
