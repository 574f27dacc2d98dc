// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cssl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// (A + A^T)/2 after rejecting asymmetry beyond kSymmetryTol.
Matrix symmetrized(const Matrix& a, const std::string& what);

// In-place (M + M^T)/2; eval() materializes before the write so the
// transpose read never aliases the destination.
inline void symmetrize_in_place(Matrix& m) {
  m = (0.5 * (m + m.transpose())).eval();
}

double l1_norm(const Matrix& a);                       // vectorized, all entries
double lp_norm(const Vector& v, double p);             // p in {1, 2, inf}
double l1p_norm(const std::vector<Matrix>& b, double p);  // sum over positions of lp across matrices
double spectral_norm(const Matrix& a);                 // symmetric input

// n x d observations, rows are data points. `centered` is the caller's
// assertion that the zero-mean model applies; center() enforces it.
struct Dataset {
  Matrix samples;
  bool centered = false;

  int n() const { return static_cast<int>(samples.rows()); }
  int dim() const { return static_cast<int>(samples.cols()); }
  Dataset centered_copy() const;
};

struct CovarianceSet {
  std::vector<Matrix> matrices;          // N symmetric d x d
  std::vector<double> weights;           // nonnegative, sum 1
  std::optional<std::vector<int>> n_points;

  static CovarianceSet create(std::vector<Matrix> matrices, std::vector<double> weights,
                              std::optional<std::vector<int>> n_points = std::nullopt);

  int size() const { return static_cast<int>(matrices.size()); }
  int dim() const { return static_cast<int>(matrices.front().rows()); }
};

struct Hyperparams {
  double rho = 0.0;
  double gamma = kInf;
  double p = 2.0;  // 1, 2 or kInf
  bool penalize_diagonal = true;

  static Hyperparams create(double rho, double gamma, double p,
                            bool penalize_diagonal = true);

  // conjugate order, 1/p + 1/q = 1
  double q() const {
    if (p == 1.0) return kInf;
    if (p == 2.0) return 2.0;
    return 1.0;
  }
};

struct PrecisionDecomposition {
  Matrix theta;
  std::vector<Matrix> omegas;

  int size() const { return static_cast<int>(omegas.size()); }
  Matrix lambda(int i) const { return theta + omegas[i]; }
  std::vector<Matrix> lambdas() const;
};

// (1/n) X^T X + diag_load * I for centered X
Matrix sample_covariance(const Dataset& dataset, double diag_load = 0.0);

// log det(precision) - tr(covariance * precision)
double log_likelihood(const Matrix& precision, const Matrix& covariance);

// S^{-1} for strictly PD S
Matrix mle_precision(const Matrix& covariance);

}  // namespace cssl
