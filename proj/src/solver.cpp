// SPDX-License-Identifier: Apache-2.0

#include "cssl/solver.hpp"

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include "cssl/kernels.hpp"

namespace cssl {

namespace {

void validate_inputs(const CovarianceSet& cov, const Hyperparams& hp) {
  (void)hp;
  for (double t : cov.weights)
    if (!(t > 0.0))
      throw std::invalid_argument(
          "solver: every dataset weight must be strictly positive; drop zero-weight "
          "datasets upstream");
}

template <class F>
void parallel_chunks(int count, int threads, F&& fn) {
  threads = std::max(1, threads);
  if (threads == 1 || count <= 1) {
    fn(0, count);
    return;
  }
  threads = std::min(threads, count);
  const int chunk = (count + threads - 1) / threads;
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  for (int t = 0; t < threads; ++t) {
    const int b = t * chunk, e = std::min(count, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&, b, e] {
      try {
        fn(b, e);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

double regime_threshold(int n, const Hyperparams& hp) {
  return std::pow(static_cast<double>(n), 1.0 / hp.p) * hp.gamma;
}

// Projects every (j, j') slice of the stacked matrices onto the dual
// constraint set. Entries already inside the set are screened out in bulk
// with the elementwise kernels before any per-entry gather happens.
void project_rows_onto_A(const std::vector<Matrix>& y0, std::vector<Matrix>& out,
                         const Hyperparams& hp, int threads) {
  const auto& k = kernels::active();
  const int n_mats = static_cast<int>(y0.size());
  const int d = static_cast<int>(y0.front().rows());
  const std::size_t total = static_cast<std::size_t>(d) * d;
  const ProjectionSpec spec{hp.rho, hp.gamma, hp.q()};

  Vector sums = Vector::Zero(d * d);
  for (int i = 0; i < n_mats; ++i) k.acc_add(sums.data(), y0[i].data(), total);
  Vector stat;
  if (hp.gamma != kInf) {
    stat = Vector::Zero(d * d);
    for (int i = 0; i < n_mats; ++i) {
      if (spec.q == 1.0)
        k.acc_abs_add(stat.data(), y0[i].data(), total);
      else if (spec.q == 2.0)
        k.acc_square(stat.data(), y0[i].data(), total);
      else
        k.acc_abs_max(stat.data(), y0[i].data(), total);
    }
  }
  const double stat_limit = (spec.q == 2.0) ? hp.gamma * hp.gamma : hp.gamma;

  out.resize(n_mats);
  for (int i = 0; i < n_mats; ++i) out[i] = y0[i];

  std::vector<std::pair<int, int>> positions;
  positions.reserve(static_cast<std::size_t>(d) * (d + 1) / 2);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r <= c; ++r) positions.emplace_back(r, c);

  parallel_chunks(static_cast<int>(positions.size()), threads, [&](int b, int e) {
    Vector slice(n_mats);
    for (int pidx = b; pidx < e; ++pidx) {
      const auto [r, c] = positions[pidx];
      if (!hp.penalize_diagonal && r == c) {
        // dual of the off-diagonal-only problem: Y_jj = 0
        for (int i = 0; i < n_mats; ++i) out[i](r, r) = 0.0;
        continue;
      }
      const Eigen::Index idx = static_cast<Eigen::Index>(c) * d + r;
      if (std::fabs(sums[idx]) <= hp.rho &&
          (hp.gamma == kInf || stat[idx] <= stat_limit))
        continue;  // already feasible, copies stand
      for (int i = 0; i < n_mats; ++i) slice[i] = y0[i](r, c);
      Vector proj = project_onto_C(slice, spec);
      for (int i = 0; i < n_mats; ++i) {
        out[i](r, c) = proj[i];
        out[i](c, r) = proj[i];
      }
    }
  });
}

// f(W~) with W~ = T^{-1} Y~ + Sigma, Y~ = proj(T(W - Sigma), A);
// +inf when some W~_i fails the PD check.
double projected_dual(const std::vector<Matrix>& w, const CovarianceSet& cov,
                      const Hyperparams& hp, int threads) {
  const auto& k = kernels::active();
  const int n = cov.size();
  const int d = cov.dim();
  const std::size_t total = static_cast<std::size_t>(d) * d;
  std::vector<Matrix> y0(n, Matrix(d, d));
  for (int i = 0; i < n; ++i)
    k.lincomb2(y0[i].data(), cov.weights[i], w[i].data(), -cov.weights[i],
               cov.matrices[i].data(), total);
  std::vector<Matrix> yt;
  project_rows_onto_A(y0, yt, hp, threads);
  double f = -static_cast<double>(d);
  for (int i = 0; i < n; ++i) {
    Matrix wt(d, d);
    k.lincomb2(wt.data(), 1.0 / cov.weights[i], yt[i].data(), 1.0,
               cov.matrices[i].data(), total);
    Eigen::LLT<Matrix> llt(wt);
    if (llt.info() != Eigen::Success) return kInf;
    const double logdet =
        2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    f -= cov.weights[i] * logdet;
  }
  return f;
}

struct ProjectedPrimal {
  double g = -kInf;
  PrecisionDecomposition decomp;
};

double eig_floor_for(const EigBounds& bounds, int i) {
  return bounds.in_regime ? bounds.lambda_min[i] : kPsdFloorFallback;
}

// Lambda~_i = psd-floored Z_i, split entrywise into theta/omega, and the
// primal objective value at that point.
ProjectedPrimal projected_primal(const std::vector<Matrix>& z, const CovarianceSet& cov,
                                 const Hyperparams& hp, const EigBounds& bounds) {
  const int n = cov.size();
  const int d = cov.dim();
  ProjectedPrimal out;
  std::vector<Matrix> lambdas(n);
  double loglik = 0.0;
  for (int i = 0; i < n; ++i) {
    const Matrix zi = 0.5 * (z[i] + z[i].transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(zi);
    Vector evals = es.eigenvalues().cwiseMax(eig_floor_for(bounds, i));
    lambdas[i] =
        es.eigenvectors() * evals.asDiagonal() * es.eigenvectors().transpose();
    symmetrize_in_place(lambdas[i]);
    const double logdet = evals.array().log().sum();
    loglik += cov.weights[i] *
              (logdet - (cov.matrices[i].array() * lambdas[i].array()).sum());
  }

  Matrix theta = Matrix::Zero(d, d);
  std::vector<Matrix> omegas(n, Matrix::Zero(d, d));
  double pen_theta = 0.0, pen_omega = 0.0;
  Vector slice(n);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r <= c; ++r) {
      for (int i = 0; i < n; ++i) slice[i] = lambdas[i](r, c);
      auto [th, om] = split_common_individual(slice, hp);
      theta(r, c) = th;
      theta(c, r) = th;
      for (int i = 0; i < n; ++i) {
        omegas[i](r, c) = om[i];
        omegas[i](c, r) = om[i];
      }
      const bool penalized = hp.penalize_diagonal || r != c;
      if (penalized) {
        const double mult = (r == c) ? 1.0 : 2.0;
        pen_theta += mult * std::fabs(th);
        pen_omega += mult * lp_norm(om, hp.p);
      }
    }

  double g = loglik - hp.rho * pen_theta;
  if (pen_omega != 0.0) g -= hp.gamma * pen_omega;
  out.g = g;
  out.decomp.theta = std::move(theta);
  out.decomp.omegas = std::move(omegas);
  return out;
}

}  // namespace

nlohmann::json SolveDiagnostics::to_json() const {
  nlohmann::json j;
  j["iterations"] = iterations;
  j["duality_gap"] = duality_gap;
  j["primal_gap"] = primal_gap;
  j["dual_gap"] = dual_gap;
  j["beta_trace"] = beta_trace;
  j["converged"] = converged;
  j["wall_time_ms"] = wall_time_ms;
  return j;
}

EigBounds eigen_bounds(const CovarianceSet& cov, const Hyperparams& hp) {
  const int n = cov.size();
  const int d = cov.dim();
  EigBounds out;
  out.lambda_min.assign(n, kPsdFloorFallback);
  out.in_regime =
      hp.rho > 0.0 && hp.gamma < kInf && hp.rho < regime_threshold(n, hp);
  if (!out.in_regime) return out;
  for (int i = 0; i < n; ++i) {
    const double t = cov.weights[i];
    out.lambda_min[i] = t / (t * spectral_norm(cov.matrices[i]) + d * hp.gamma);
  }
  out.lambda_max =
      std::pow(static_cast<double>(n), 1.0 / hp.p) * d * d / hp.rho;
  return out;
}

void update_W(SolverState& state, const CovarianceSet& cov, int threads) {
  const int n = cov.size();
  const int d = cov.dim();
  const std::size_t total = static_cast<std::size_t>(d) * d;
  const auto& k = kernels::active();
  parallel_chunks(n, threads, [&](int b, int e) {
    Matrix m(d, d);
    for (int i = b; i < e; ++i) {
      const double t = cov.weights[i];
      if (!(t > 0.0)) throw std::invalid_argument("update_W: weight t_i = 0");
      const double bt = state.beta * t;
      k.lincomb3(m.data(), 1.0 / t, state.Y[i].data(), -1.0 / bt, state.Z[i].data(),
                 1.0, cov.matrices[i].data(), total);
      symmetrize_in_place(m);  // stop asymmetry drift across iterations
      Eigen::SelfAdjointEigenSolver<Matrix> es(m);
      Vector mapped(d);
      for (int j = 0; j < d; ++j) {
        const double s = es.eigenvalues()[j];
        mapped[j] = 0.5 * (s + std::sqrt(s * s + 4.0 / bt));
      }
      state.W[i] =
          es.eigenvectors() * mapped.asDiagonal() * es.eigenvectors().transpose();
      symmetrize_in_place(state.W[i]);
    }
  });
}

void update_Y(SolverState& state, const CovarianceSet& cov, const Hyperparams& hp,
              int threads) {
  const auto& k = kernels::active();
  const int n = cov.size();
  const int d = cov.dim();
  const std::size_t total = static_cast<std::size_t>(d) * d;
  std::vector<Matrix> y0(n, Matrix(d, d));
  for (int i = 0; i < n; ++i)
    k.lincomb3(y0[i].data(), cov.weights[i], state.W[i].data(), 1.0 / state.beta,
               state.Z[i].data(), -cov.weights[i], cov.matrices[i].data(), total);
  project_rows_onto_A(y0, state.Y, hp, threads);
}

void update_Z(SolverState& state, const CovarianceSet& cov) {
  const auto& k = kernels::active();
  const int d = cov.dim();
  const std::size_t total = static_cast<std::size_t>(d) * d;
  Matrix resid(d, d);
  for (int i = 0; i < cov.size(); ++i) {
    const double t = cov.weights[i];
    k.lincomb3(resid.data(), t, state.W[i].data(), -1.0, state.Y[i].data(), -t,
               cov.matrices[i].data(), total);
    k.axpy(state.Z[i].data(), state.beta, resid.data(), total);
  }
}

double adapt_beta(double primal_gap, double dual_gap, double beta,
                  std::pair<double, double> bounds) {
  if (primal_gap >= 10.0 * dual_gap)
    beta *= 2.0;
  else if (dual_gap >= 10.0 * primal_gap)
    beta *= 0.5;
  return std::clamp(beta, bounds.first, bounds.second);
}

Matrix project_psd_floor(const Matrix& m, double floor) {
  const Matrix sym = symmetrized(m, "project_psd_floor input");
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.eigenvalues().minCoeff() >= floor) return m;
  Vector clamped = es.eigenvalues().cwiseMax(floor);
  Matrix out =
      es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

std::pair<double, Vector> split_common_individual(const Vector& lambda_vec,
                                                  const Hyperparams& hp) {
  const int n = static_cast<int>(lambda_vec.size());
  auto finish = [&](double theta) {
    return std::make_pair(theta, Vector(lambda_vec.array() - theta));
  };
  if (hp.gamma == kInf) {
    // individual deviations are infinitely penalized; exact only when all
    // entries coincide (always true for the pooled N = 1 problem)
    return finish(lambda_vec.mean());
  }
  if (hp.rho >= regime_threshold(n, hp)) return finish(0.0);  // MSICS regime

  auto objective = [&](double theta) {
    return hp.rho * std::fabs(theta) +
           hp.gamma * lp_norm(Vector(lambda_vec.array() - theta), hp.p);
  };

  if (hp.p == 2.0) {
    const double s = lambda_vec.sum();
    const double norm2 = lambda_vec.norm();
    if (hp.gamma * std::fabs(s) <= hp.rho * norm2) return finish(0.0);
    const double denom = hp.gamma * hp.gamma * n - hp.rho * hp.rho;
    const double tau =
        hp.rho * hp.rho * (n * norm2 * norm2 - s * s) / denom;
    const double sign = s > 0.0 ? 1.0 : -1.0;
    return finish((s - sign * std::sqrt(std::max(tau, 0.0))) / n);
  }

  std::vector<double> candidates{0.0};
  if (hp.p == 1.0) {
    for (int i = 0; i < n; ++i) candidates.push_back(lambda_vec[i]);
  } else {  // p = inf
    candidates.push_back(0.5 * (lambda_vec.minCoeff() + lambda_vec.maxCoeff()));
  }
  double best = candidates.front();
  double best_obj = objective(best);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double obj = objective(candidates[i]);
    // ties favor the smaller-|theta| candidate (sparser common structure)
    if (obj < best_obj - 1e-300 ||
        (obj == best_obj && std::fabs(candidates[i]) < std::fabs(best))) {
      best = candidates[i];
      best_obj = obj;
    }
  }
  return finish(best);
}

double primal_objective(const PrecisionDecomposition& decomp, const CovarianceSet& cov,
                        const Hyperparams& hp) {
  double value = 0.0;
  for (int i = 0; i < cov.size(); ++i)
    value += cov.weights[i] *
             log_likelihood(decomp.theta + decomp.omegas[i], cov.matrices[i]);
  double pen_theta, pen_omega;
  if (hp.penalize_diagonal) {
    pen_theta = l1_norm(decomp.theta);
    pen_omega = l1p_norm(decomp.omegas, hp.p);
  } else {
    Matrix theta_off = decomp.theta;
    theta_off.diagonal().setZero();
    pen_theta = l1_norm(theta_off);
    std::vector<Matrix> omegas_off = decomp.omegas;
    for (auto& om : omegas_off) om.diagonal().setZero();
    pen_omega = l1p_norm(omegas_off, hp.p);
  }
  value -= hp.rho * pen_theta;
  if (pen_omega != 0.0) value -= hp.gamma * pen_omega;
  return value;
}

double dual_objective(const std::vector<Matrix>& w, const CovarianceSet& cov,
                      const Hyperparams& hp) {
  const int n = cov.size();
  const int d = cov.dim();
  constexpr double tol = 1e-9;
  const double q = hp.q();
  for (int c = 0; c < d; ++c)
    for (int r = 0; r < d; ++r) {
      Vector delta(n);
      for (int i = 0; i < n; ++i)
        delta[i] = cov.weights[i] * (w[i](r, c) - cov.matrices[i](r, c));
      if (!hp.penalize_diagonal && r == c) {
        if (delta.cwiseAbs().maxCoeff() > tol)
          throw std::domain_error("dual_objective: diagonal equality violated");
        continue;
      }
      if (std::fabs(delta.sum()) > hp.rho + tol)
        throw std::domain_error("dual_objective: sum constraint violated");
      if (hp.gamma != kInf && lp_norm(delta, q) > hp.gamma + tol)
        throw std::domain_error("dual_objective: q-norm constraint violated");
    }
  double f = -static_cast<double>(d);
  for (int i = 0; i < n; ++i) {
    Eigen::LLT<Matrix> llt(w[i]);
    if (llt.info() != Eigen::Success)
      throw std::domain_error("dual_objective: W_i not positive definite");
    f -= cov.weights[i] * 2.0 *
         llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  }
  return f;
}

std::pair<double, double> primal_dual_gaps(const SolverState& state,
                                           const std::vector<Matrix>& prev_y,
                                           const CovarianceSet& cov) {
  const auto& k = kernels::active();
  const int d = cov.dim();
  const std::size_t total = static_cast<std::size_t>(d) * d;
  Matrix resid(d, d);
  double primal_sq = 0.0, dual_sq = 0.0;
  for (int i = 0; i < cov.size(); ++i) {
    const double t = cov.weights[i];
    k.lincomb3(resid.data(), t, state.W[i].data(), -1.0, state.Y[i].data(), -t,
               cov.matrices[i].data(), total);
    primal_sq += k.sum_squares(resid.data(), total);
    dual_sq += t * t * k.sum_squares_diff(state.Y[i].data(), prev_y[i].data(), total);
  }
  return {std::sqrt(primal_sq), state.beta * std::sqrt(dual_sq)};
}

double duality_gap(SolverState& state, const CovarianceSet& cov, const Hyperparams& hp,
                   const EigBounds& bounds) {
  const double f = projected_dual(state.W, cov, hp, 1);
  const ProjectedPrimal pp = projected_primal(state.Z, cov, hp, bounds);
  state.best_primal = std::max(state.best_primal, pp.g);
  return f - state.best_primal;
}

SolveResult solve(const CovarianceSet& cov, const Hyperparams& hp,
                  const SolverConfig& config) {
  validate_inputs(cov, hp);
  const int n = cov.size();
  const int d = cov.dim();

  // gamma = inf collapses every Omega_i to zero: solve the pooled
  // single-matrix problem with S = sum_i t_i S_i and share the result.
  if (hp.gamma == kInf && n > 1) {
    Matrix pooled = Matrix::Zero(d, d);
    for (int i = 0; i < n; ++i) pooled += cov.weights[i] * cov.matrices[i];
    CovarianceSet pooled_cov = CovarianceSet::create({pooled}, {1.0});
    SolverConfig cfg = config;
    if (cfg.warm_start_z.size() != 1) cfg.warm_start_z.clear();
    SolveResult pooled_result = solve(pooled_cov, hp, cfg);
    SolveResult out;
    out.decomp.theta = pooled_result.decomp.theta + pooled_result.decomp.omegas[0];
    out.decomp.omegas.assign(n, Matrix::Zero(d, d));
    out.diagnostics = pooled_result.diagnostics;
    return out;
  }

  const auto t_start = std::chrono::steady_clock::now();
  const double eps_gap = config.eps_gap < 0.0 ? 1e-5 * d : config.eps_gap;
  if (!(eps_gap > 0.0) || !(config.eps_pdgap > 0.0))
    throw std::invalid_argument("solver: tolerances must be positive");

  const EigBounds bounds = eigen_bounds(cov, hp);

  SolverState state;
  state.W.resize(n);
  state.Y.assign(n, Matrix::Zero(d, d));
  state.Z.resize(n);
  for (int i = 0; i < n; ++i)
    state.W[i] = cov.matrices[i] + Matrix::Identity(d, d);
  if (!config.warm_start_z.empty()) {
    if (static_cast<int>(config.warm_start_z.size()) != n)
      throw std::invalid_argument("solver: warm start must provide N matrices");
    state.Z = config.warm_start_z;
  } else {
    state.Z.assign(n, Matrix::Identity(d, d));
  }
  state.beta = std::clamp(config.beta0, config.beta_min, config.beta_max);

  SolveDiagnostics diag;
  ProjectedPrimal last_pp, best_pp;
  std::vector<Matrix> prev_y(n);
  bool converged = false;

  for (int k = 0; k < config.max_iter; ++k) {
    state.iter = k;
    update_W(state, cov, config.threads);
    prev_y = state.Y;
    update_Y(state, cov, hp, config.threads);
    update_Z(state, cov);

    const auto [primal_gap, dual_gap] = primal_dual_gaps(state, prev_y, cov);
    const double f = projected_dual(state.W, cov, hp, config.threads);
    ProjectedPrimal pp = projected_primal(state.Z, cov, hp, bounds);
    if (pp.g > state.best_primal) {
      state.best_primal = pp.g;
      best_pp = pp;
    }
    const double gap = f - state.best_primal;
    last_pp = std::move(pp);

    state.gap_history.push_back({gap, primal_gap, dual_gap});
    diag.beta_trace.push_back(state.beta);
    diag.iterations = k + 1;
    diag.duality_gap = gap;
    diag.primal_gap = primal_gap;
    diag.dual_gap = dual_gap;

    if (gap <= eps_gap || std::max(primal_gap, dual_gap) <= config.eps_pdgap) {
      converged = true;
      break;
    }
    if (config.adapt_beta)
      state.beta = adapt_beta(primal_gap, dual_gap, state.beta,
                              {config.beta_min, config.beta_max});
  }

  diag.converged = converged;
  diag.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                t_start)
          .count();

  if (!converged) {
    SolveResult best{best_pp.decomp.theta.size() ? best_pp.decomp : last_pp.decomp,
                     diag};
    throw NonConvergenceError(
        "solver: max_iter = " + std::to_string(config.max_iter) +
            " reached with duality gap " + std::to_string(diag.duality_gap),
        std::move(best));
  }
  return {last_pp.decomp, diag};
}

}  // namespace cssl
