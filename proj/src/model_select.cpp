// SPDX-License-Identifier: Apache-2.0

#include "cssl/model_select.hpp"

#include <algorithm>
#include <cmath>

namespace cssl {

ScaleLine fit_scale_line(const CovarianceSet& cov) {
  const int d = cov.dim();
  if (d < 2) throw std::invalid_argument("fit_scale_line: d >= 2 required");
  const int n = cov.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int m = 0;
  for (int c = 0; c < d; ++c)
    for (int r = 0; r <= c; ++r) {
      double mx = 0.0, wsum = 0.0;
      for (int i = 0; i < n; ++i) {
        mx = std::max(mx, std::fabs(cov.matrices[i](r, c)));
        wsum += cov.weights[i] * cov.matrices[i](r, c);
      }
      const double y = std::fabs(wsum);
      sx += mx;
      sy += y;
      sxx += mx * mx;
      sxy += mx * y;
      ++m;
    }
  const double var = sxx - sx * sx / m;
  if (var <= 1e-300)
    throw std::invalid_argument("fit_scale_line: degenerate fit, all abscissae equal");
  ScaleLine line;
  line.s1 = (sxy - sx * sy / m) / var;
  line.s0 = (sy - line.s1 * sx) / m;
  return line;
}

std::pair<double, double> params_from_alpha(const ScaleLine& line, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("params_from_alpha: alpha > 0");
  return {std::max(line.s1 * alpha + line.s0, 0.0), alpha};
}

CommonStructure extract_common_exact(const PrecisionDecomposition& decomp,
                                     double zero_tol) {
  const int d = static_cast<int>(decomp.theta.rows());
  const int n = decomp.size();
  CommonStructure out;
  out.theta_hat = Matrix::Zero(d, d);
  out.support = Eigen::MatrixXi::Zero(d, d);
  const Matrix lambda1 = decomp.theta + decomp.omegas[0];
  for (int c = 0; c < d; ++c)
    for (int r = 0; r <= c; ++r) {
      double max_om = 0.0;
      for (int i = 0; i < n; ++i)
        max_om = std::max(max_om, std::fabs(decomp.omegas[i](r, c)));
      if (max_om <= zero_tol && std::fabs(decomp.theta(r, c)) > zero_tol) {
        out.support(r, c) = out.support(c, r) = 1;
        out.theta_hat(r, c) = out.theta_hat(c, r) = lambda1(r, c);
      }
    }
  return out;
}

Matrix entry_variation(const std::vector<Matrix>& precisions) {
  const int n = static_cast<int>(precisions.size());
  const int d = static_cast<int>(precisions.front().rows());
  Matrix var = Matrix::Zero(d, d);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r <= c; ++r) {
      double v = 0.0;
      for (int i = 0; i < n; ++i)
        for (int i2 = i + 1; i2 < n; ++i2)
          v = std::max(v, std::fabs(precisions[i](r, c) - precisions[i2](r, c)));
      var(r, c) = var(c, r) = v;
    }
  return var;
}

double variation_quantile(const std::vector<Matrix>& precisions, double eps0) {
  if (precisions.size() < 2)
    throw std::invalid_argument("variation_quantile: N >= 2 required");
  if (!(eps0 > 0.0) || !(eps0 < 1.0))
    throw std::invalid_argument("variation_quantile: eps0 in (0,1) required");
  const Matrix var = entry_variation(precisions);
  const int d = static_cast<int>(var.rows());
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(d) * (d + 1) / 2);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r <= c; ++r) vals.push_back(var(r, c));
  std::sort(vals.begin(), vals.end());
  const auto m = vals.size();
  std::size_t k = static_cast<std::size_t>(std::ceil(eps0 * static_cast<double>(m)));
  k = std::clamp<std::size_t>(k, 1, m);
  return vals[k - 1];
}

CommonStructure extract_common_threshold(const std::vector<Matrix>& precisions,
                                         double eps0) {
  const double eps = variation_quantile(precisions, eps0);
  const Matrix var = entry_variation(precisions);
  const int n = static_cast<int>(precisions.size());
  const int d = static_cast<int>(var.rows());
  CommonStructure out;
  out.theta_hat = Matrix::Zero(d, d);
  out.support = Eigen::MatrixXi::Zero(d, d);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r <= c; ++r) {
      if (var(r, c) > eps) continue;
      bool all_zero = true;
      for (int i = 0; i < n && all_zero; ++i)
        all_zero = precisions[i](r, c) == 0.0;
      if (all_zero) continue;  // zero edges are not part of a substructure
      out.support(r, c) = out.support(c, r) = 1;
      out.theta_hat(r, c) = out.theta_hat(c, r) = precisions[0](r, c);
    }
  return out;
}

}  // namespace cssl
