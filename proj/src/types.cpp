// SPDX-License-Identifier: Apache-2.0

#include "cssl/types.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "cssl/kernels.hpp"

namespace cssl {

Matrix symmetrized(const Matrix& a, const std::string& what) {
  if (a.rows() != a.cols())
    throw std::invalid_argument(what + ": matrix is not square");
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol)
    throw std::invalid_argument(what + ": asymmetry " + std::to_string(asym) +
                                " exceeds tolerance");
  return 0.5 * (a + a.transpose());
}

double l1_norm(const Matrix& a) {
  return kernels::active().abs_sum(a.data(), static_cast<std::size_t>(a.size()));
}

double lp_norm(const Vector& v, double p) {
  const auto n = static_cast<std::size_t>(v.size());
  if (p == 1.0) return kernels::active().abs_sum(v.data(), n);
  if (p == 2.0) return std::sqrt(kernels::active().sum_squares(v.data(), n));
  if (p == kInf) return kernels::active().abs_max(v.data(), n);
  throw std::invalid_argument("lp_norm: p must be 1, 2 or inf");
}

double l1p_norm(const std::vector<Matrix>& b, double p) {
  if (b.empty()) return 0.0;
  const int d = static_cast<int>(b.front().rows());
  const int n_mats = static_cast<int>(b.size());
  double total = 0.0;
  Vector slice(n_mats);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r < d; ++r) {
      for (int i = 0; i < n_mats; ++i) slice[i] = b[i](r, c);
      total += lp_norm(slice, p);
    }
  return total;
}

double spectral_norm(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Dataset Dataset::centered_copy() const {
  Dataset out;
  out.samples = samples.rowwise() - samples.colwise().mean();
  out.centered = true;
  return out;
}

CovarianceSet CovarianceSet::create(std::vector<Matrix> matrices,
                                    std::vector<double> weights,
                                    std::optional<std::vector<int>> n_points) {
  if (matrices.empty()) throw std::invalid_argument("covariance set: N >= 1 required");
  if (matrices.size() != weights.size())
    throw std::invalid_argument("covariance set: one weight per matrix required");
  const auto d = matrices.front().rows();
  if (d < 1) throw std::invalid_argument("covariance set: d >= 1 required");
  double wsum = 0.0;
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    if (matrices[i].rows() != d || matrices[i].cols() != d)
      throw std::invalid_argument("covariance set: matrix " + std::to_string(i) +
                                  " has inconsistent shape");
    matrices[i] = symmetrized(matrices[i], "covariance matrix " + std::to_string(i));
    if (weights[i] < 0.0)
      throw std::invalid_argument("covariance set: negative weight");
    wsum += weights[i];
  }
  if (std::fabs(wsum - 1.0) > 1e-12)
    throw std::invalid_argument("covariance set: weights must sum to 1, got " +
                                std::to_string(wsum));
  if (n_points && n_points->size() != matrices.size())
    throw std::invalid_argument("covariance set: n_points size mismatch");
  CovarianceSet out;
  out.matrices = std::move(matrices);
  out.weights = std::move(weights);
  out.n_points = std::move(n_points);
  return out;
}

Hyperparams Hyperparams::create(double rho, double gamma, double p,
                                bool penalize_diagonal) {
  if (!(rho >= 0.0)) throw std::invalid_argument("hyperparams: rho >= 0 required");
  if (!(gamma > 0.0)) throw std::invalid_argument("hyperparams: gamma > 0 or inf required");
  if (p != 1.0 && p != 2.0 && p != kInf)
    throw std::invalid_argument("hyperparams: p must be 1, 2 or inf");
  Hyperparams hp;
  hp.rho = rho;
  hp.gamma = gamma;
  hp.p = p;
  hp.penalize_diagonal = penalize_diagonal;
  return hp;
}

std::vector<Matrix> PrecisionDecomposition::lambdas() const {
  std::vector<Matrix> out;
  out.reserve(omegas.size());
  for (const auto& om : omegas) out.push_back(theta + om);
  return out;
}

Matrix sample_covariance(const Dataset& dataset, double diag_load) {
  if (dataset.n() < 1) throw std::invalid_argument("sample_covariance: n >= 1 required");
  if (diag_load < 0.0)
    throw std::invalid_argument("sample_covariance: diag_load >= 0 required");
  if (!dataset.centered)
    throw std::invalid_argument(
        "sample_covariance: dataset not marked centered; call centered_copy() or set "
        "the flag for zero-mean data");
  const double n = dataset.n();
  Matrix s = dataset.samples.transpose() * dataset.samples / n;
  symmetrize_in_place(s);
  if (diag_load > 0.0) s.diagonal().array() += diag_load;
  return s;
}

double log_likelihood(const Matrix& precision, const Matrix& covariance) {
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("log_likelihood: precision matrix is not positive definite");
  const double logdet =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return logdet - (covariance * precision).trace();
}

Matrix mle_precision(const Matrix& covariance) {
  const int d = static_cast<int>(covariance.rows());
  Eigen::LLT<Matrix> llt(covariance);
  if (llt.info() != Eigen::Success)
    throw std::domain_error(
        "mle_precision: covariance is singular or indefinite; add diagonal loading "
        "(diag_load) and retry");
  Matrix inv = llt.solve(Matrix::Identity(d, d));
  symmetrize_in_place(inv);
  const double resid = (covariance * inv - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
  if (resid > 1e-8)
    throw std::domain_error(
        "mle_precision: inverse residual " + std::to_string(resid) +
        " too large; covariance is near-singular, add diagonal loading (diag_load)");
  return inv;
}

}  // namespace cssl
