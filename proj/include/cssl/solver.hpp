// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>

#include <json.hpp>

#include "cssl/projections.hpp"
#include "cssl/types.hpp"

namespace cssl {

struct SolverConfig {
  double eps_gap = -1.0;   // duality-gap threshold; < 0 selects 1e-5 * d
  double eps_pdgap = 1e-5;
  int max_iter = 1000;
  double beta0 = 1.0;
  double beta_min = 1e-4;
  double beta_max = 1e4;
  bool adapt_beta = true;
  int threads = 1;                    // fan-out for the W/Y subproblems
  std::vector<Matrix> warm_start_z;   // previous solution as Z^(0); empty = cold start
};

// Theorem-1 eigenvalue bounds; valid in the regime 0 < rho < N^{1/p} gamma < inf.
// Outside it we fall back to a small PSD floor and no upper bound.
struct EigBounds {
  std::vector<double> lambda_min;
  double lambda_max = kInf;
  bool in_regime = false;
};

inline constexpr double kPsdFloorFallback = 1e-8;

struct IterationGaps {
  double duality = kInf;
  double primal = kInf;
  double dual = kInf;
};

struct SolverState {
  std::vector<Matrix> W, Y, Z;
  double beta = 1.0;
  int iter = 0;
  std::vector<IterationGaps> gap_history;
  double best_primal = -kInf;
};

struct SolveDiagnostics {
  int iterations = 0;
  double duality_gap = kInf;
  double primal_gap = kInf;
  double dual_gap = kInf;
  std::vector<double> beta_trace;
  bool converged = false;
  double wall_time_ms = 0.0;

  nlohmann::json to_json() const;
};

struct SolveResult {
  PrecisionDecomposition decomp;
  SolveDiagnostics diagnostics;
};

class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(std::string msg, SolveResult best_iterate)
      : std::runtime_error(std::move(msg)), best(std::move(best_iterate)) {}
  SolveResult best;
};

EigBounds eigen_bounds(const CovarianceSet& cov, const Hyperparams& hp);

// One W step: W_i from the eigenvalue map of M_i = Y_i/t_i - Z_i/(beta t_i) + S_i.
void update_W(SolverState& state, const CovarianceSet& cov, int threads = 1);

// One Y step: per-entry projection of Y0 = TW + Z/beta - TSigma onto the
// constraint set; diagonal slices are pinned to zero when the diagonal is
// unpenalized (the dual of the off-diagonal-only problem has Y_jj = 0).
void update_Y(SolverState& state, const CovarianceSet& cov, const Hyperparams& hp,
              int threads = 1);

// Z <- Z + beta (TW - Y - TSigma)
void update_Z(SolverState& state, const CovarianceSet& cov);

double adapt_beta(double primal_gap, double dual_gap, double beta,
                  std::pair<double, double> bounds);

// Eigenvalue clamp from below at `floor`.
Matrix project_psd_floor(const Matrix& m, double floor);

// min_theta rho |theta| + gamma ||lambda_vec - theta 1||_p, returning theta
// and omega = lambda_vec - theta 1.
std::pair<double, Vector> split_common_individual(const Vector& lambda_vec,
                                                  const Hyperparams& hp);

double primal_objective(const PrecisionDecomposition& decomp, const CovarianceSet& cov,
                        const Hyperparams& hp);

// -sum t_i log det W_i - d; requires dual feasibility within 1e-9.
double dual_objective(const std::vector<Matrix>& w, const CovarianceSet& cov,
                      const Hyperparams& hp);

// ( ||TW - Y - TSigma||_2 , beta ||T (Y - prev_Y)||_2 )
std::pair<double, double> primal_dual_gaps(const SolverState& state,
                                           const std::vector<Matrix>& prev_y,
                                           const CovarianceSet& cov);

// f(W~) - max_k' g(theta~, omega~); updates state.best_primal.
double duality_gap(SolverState& state, const CovarianceSet& cov, const Hyperparams& hp,
                   const EigBounds& bounds);

SolveResult solve(const CovarianceSet& cov, const Hyperparams& hp,
                  const SolverConfig& config = {});

}  // namespace cssl
