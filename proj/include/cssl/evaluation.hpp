// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include <json.hpp>

#include "cssl/types.hpp"

namespace cssl {

struct StructureMetrics {
  double wtp = 0.0, wfp = 0.0, wfn = 0.0;
  double precision = 0.0, recall = 0.0, f_measure = 0.0;
  double f0_measure = std::numeric_limits<double>::quiet_NaN();

  nlohmann::json to_json() const;
};

// Weighted precision/recall/F over the strict upper triangle. eps drives the
// estimated-commonness indicator (strict <); truth commonness is exact
// equality; weights are max_i |Lambda_i,jj'| of the truth.
// f0_measure is left NaN; combine with f0_measure() when needed.
StructureMetrics weighted_prf(const std::vector<Matrix>& estimates,
                              const std::vector<Matrix>& truth, double eps);

// Zero-pattern agreement score; TP counts agreeing zeros (the paper's
// polarity), the all-nonzero degenerate case scores 1.
double f0_measure(const std::vector<Matrix>& estimates,
                  const std::vector<Matrix>& truth);

struct AnomalyReport {
  Vector scores;          // a_j = max(d_j_ab, d_j_ba)
  Matrix per_direction;   // d x 2, columns (d_ab, d_ba)
  std::optional<double> auc;
};

// Per-variable correlation-anomaly score between two GGMs: conditional KL of
// x_j given the rest, averaged over the conditioning variables, in both
// directions.
AnomalyReport anomaly_score_pair(const Matrix& lam_a, const Matrix& lam_b);

// Rank-statistic AUC; ties contribute 1/2.
double roc_auc(const Vector& scores, const std::vector<int>& labels);

}  // namespace cssl
