// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cssl/types.hpp"

namespace cssl {

// Fitted linear relation |sum_i t_i S_i,jj'| ~= s1 * max_i |S_i,jj'| + s0.
struct ScaleLine {
  double s0 = 0.0;
  double s1 = 0.0;
};

struct CommonStructure {
  Matrix theta_hat;          // value of the common entry (Lambda_1), 0 elsewhere
  Eigen::MatrixXi support;   // detected common edges, 0/1, symmetric
};

// Least squares over the tuples {max_i |S_i,jj'|, |sum_i t_i S_i,jj'|},
// 1 <= j <= j' <= d.
ScaleLine fit_scale_line(const CovarianceSet& cov);

// rho = max(s1*alpha + s0, 0), gamma = alpha
std::pair<double, double> params_from_alpha(const ScaleLine& line, double alpha);

// Common entry iff max_i |Omega_i,jj'| <= zero_tol and |Theta_jj'| > zero_tol.
CommonStructure extract_common_exact(const PrecisionDecomposition& decomp,
                                     double zero_tol = 1e-6);

// Entrywise variation max_{i<i'} |L_i - L_i'| over the upper triangle.
Matrix entry_variation(const std::vector<Matrix>& precisions);

// Inclusive lower quantile of the upper-triangle variation values: the
// smallest v with at least ceil(eps0 * m) values <= v.
double variation_quantile(const std::vector<Matrix>& precisions, double eps0);

// Baseline heuristic: variation <= eps (the eps0-quantile) and not all-zero.
CommonStructure extract_common_threshold(const std::vector<Matrix>& precisions,
                                         double eps0);

}  // namespace cssl
