// SPDX-License-Identifier: Apache-2.0

#include "cssl/evaluation.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace cssl {

nlohmann::json StructureMetrics::to_json() const {
  nlohmann::json j;
  j["wtp"] = wtp;
  j["wfp"] = wfp;
  j["wfn"] = wfn;
  j["precision"] = precision;
  j["recall"] = recall;
  j["f_measure"] = f_measure;
  if (std::isnan(f0_measure))
    j["f0_measure"] = nullptr;
  else
    j["f0_measure"] = f0_measure;
  return j;
}

StructureMetrics weighted_prf(const std::vector<Matrix>& estimates,
                              const std::vector<Matrix>& truth, double eps) {
  if (estimates.size() != truth.size() || truth.size() < 2)
    throw std::invalid_argument("weighted_prf: matching lists with N >= 2 required");
  const int n = static_cast<int>(truth.size());
  const int d = static_cast<int>(truth.front().rows());
  StructureMetrics m;
  for (int c = 0; c < d; ++c)
    for (int r = 0; r < c; ++r) {
      double est_var = 0.0, est_mag = 0.0, true_var = 0.0, true_mag = 0.0;
      for (int i = 0; i < n; ++i) {
        est_mag = std::max(est_mag, std::fabs(estimates[i](r, c)));
        true_mag = std::max(true_mag, std::fabs(truth[i](r, c)));
        for (int i2 = i + 1; i2 < n; ++i2) {
          est_var = std::max(est_var,
                             std::fabs(estimates[i](r, c) - estimates[i2](r, c)));
          true_var =
              std::max(true_var, std::fabs(truth[i](r, c) - truth[i2](r, c)));
        }
      }
      const bool jc_est = est_var < eps;     // estimated common
      const bool jp_est = est_mag > 0.0;     // estimated present
      const bool jc_true = true_var == 0.0;  // truly common
      if (jc_est && jp_est && jc_true) m.wtp += true_mag;
      if (jc_est && jp_est && !jc_true) m.wfp += true_mag;
      if (!(jc_est && jp_est) && jc_true) m.wfn += true_mag;
    }
  m.precision = (m.wtp + m.wfp > 0.0) ? m.wtp / (m.wtp + m.wfp) : 0.0;
  m.recall = (m.wtp + m.wfn > 0.0) ? m.wtp / (m.wtp + m.wfn) : 0.0;
  m.f_measure = (m.precision + m.recall > 0.0)
                    ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                    : 0.0;
  return m;
}

double f0_measure(const std::vector<Matrix>& estimates,
                  const std::vector<Matrix>& truth) {
  if (estimates.size() != truth.size() || truth.empty())
    throw std::invalid_argument("f0_measure: matching nonempty lists required");
  const int n = static_cast<int>(truth.size());
  const int d = static_cast<int>(truth.front().rows());
  long tp = 0, fp = 0, fn = 0;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c)
      for (int r = 0; r < c; ++r) {
        const bool true_zero = truth[i](r, c) == 0.0;
        const bool est_zero = estimates[i](r, c) == 0.0;
        if (true_zero && est_zero) ++tp;
        if (!true_zero && est_zero) ++fp;
        if (true_zero && !est_zero) ++fn;
      }
  const double denom = 2.0 * tp + fp + fn;
  return denom > 0.0 ? 2.0 * tp / denom : 1.0;
}

namespace {

struct Partition {
  Matrix block;   // (d-1) x (d-1), index j removed
  Vector col;     // column j without the diagonal entry
  double corner;  // (j, j)
};

Partition partition_out(const Matrix& m, int j) {
  const int d = static_cast<int>(m.rows());
  Partition p;
  p.block.resize(d - 1, d - 1);
  p.col.resize(d - 1);
  int rr = 0;
  for (int r = 0; r < d; ++r) {
    if (r == j) continue;
    p.col[rr] = m(r, j);
    int cc = 0;
    for (int c = 0; c < d; ++c) {
      if (c == j) continue;
      p.block(rr, cc) = m(r, c);
      ++cc;
    }
    ++rr;
  }
  p.corner = m(j, j);
  return p;
}

// E_{x ~ p_a}[ KL( p_a(x_j | x_rest) || p_b(x_j | x_rest) ) ] written in the
// partitioned precision/covariance quantities of the two models.
double directed_score(const Matrix& lam_a, const Matrix& w_a, const Matrix& lam_b,
                      int j) {
  const Partition pa = partition_out(lam_a, j);
  const Partition pb = partition_out(lam_b, j);
  const Partition wa = partition_out(w_a, j);
  const double lam_ja = pa.corner, lam_jb = pb.corner;
  const double term1 = -wa.col.dot(pa.col - pb.col);
  const double quad_b = pb.col.dot(wa.block * pb.col) / lam_jb;
  const double quad_a = pa.col.dot(wa.block * pa.col) / lam_ja;
  const double term2 = 0.5 * (quad_b - quad_a);
  const double term3 =
      0.5 * (std::log(lam_ja / lam_jb) + wa.corner * (lam_jb - lam_ja));
  return term1 + term2 + term3;
}

Matrix pd_inverse(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::domain_error(std::string(what) + ": matrix not positive definite");
  Matrix inv = llt.solve(Matrix::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace

AnomalyReport anomaly_score_pair(const Matrix& lam_a, const Matrix& lam_b) {
  if (lam_a.rows() != lam_b.rows())
    throw std::invalid_argument("anomaly_score_pair: dimension mismatch");
  const int d = static_cast<int>(lam_a.rows());
  const Matrix w_a = pd_inverse(lam_a, "anomaly_score_pair (A)");
  const Matrix w_b = pd_inverse(lam_b, "anomaly_score_pair (B)");
  AnomalyReport rep;
  rep.scores.resize(d);
  rep.per_direction.resize(d, 2);
  for (int j = 0; j < d; ++j) {
    const double ab = directed_score(lam_a, w_a, lam_b, j);
    const double ba = directed_score(lam_b, w_b, lam_a, j);
    rep.per_direction(j, 0) = ab;
    rep.per_direction(j, 1) = ba;
    rep.scores[j] = std::max(ab, ba);
  }
  return rep;
}

double roc_auc(const Vector& scores, const std::vector<int>& labels) {
  const int d = static_cast<int>(scores.size());
  if (static_cast<int>(labels.size()) != d)
    throw std::invalid_argument("roc_auc: labels size mismatch");
  long npos = std::count_if(labels.begin(), labels.end(), [](int v) { return v != 0; });
  long nneg = d - npos;
  if (npos == 0 || nneg == 0)
    throw std::invalid_argument("roc_auc: need at least one positive and one negative");
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return scores[a] < scores[b]; });
  // average ranks across ties
  std::vector<double> rank(d);
  int k = 0;
  while (k < d) {
    int k2 = k;
    while (k2 + 1 < d && scores[order[k2 + 1]] == scores[order[k]]) ++k2;
    const double avg = 0.5 * (k + k2) + 1.0;
    for (int t = k; t <= k2; ++t) rank[order[t]] = avg;
    k = k2 + 1;
  }
  double rank_sum = 0.0;
  for (int i = 0; i < d; ++i)
    if (labels[i]) rank_sum += rank[i];
  return (rank_sum - 0.5 * npos * (npos + 1)) / (static_cast<double>(npos) * nneg);
}

}  // namespace cssl
