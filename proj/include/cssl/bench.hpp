// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "cssl/evaluation.hpp"
#include "cssl/types.hpp"

namespace cssl::bench {

// "cssl" (heuristic rho/gamma), "cssl_pooled" (gamma = inf), "sics"
// (per-dataset l1 fits), "msics" (group penalty, theta = 0 regime).
struct MethodSpec {
  std::string method = "cssl";
  double p = 2.0;
  std::vector<double> eps0s;  // threshold-extraction quantiles (baselines)

  std::string id() const;
};

struct ExperimentPlan {
  std::vector<int> dims{25};
  int n_datasets = 5;
  int runs = 30;
  std::vector<double> alpha_grid;
  std::vector<MethodSpec> methods;
  double density_target = 0.15;
  std::uint64_t seed = 0;
  int n_per_d = 5;             // samples per dataset = n_per_d * d
  double cssl_eps = 1e-4;      // variation threshold for CSSL metric rows
  double truncate_tol = 1e-5;  // |entry| <= tol snaps to exact zero
  double diag_load = 0.0;
  int workers = 0;             // 0 = hardware concurrency
  int max_iter = 1000;

  // anomaly protocol
  int anomaly_normal = 4;
  int anomaly_faulty = 1;
  int anomaly_n_per_d = 10;
  bool anomaly_inject = true;
  double anomaly_diag_load = 1e-3;

  static ExperimentPlan structure_default();
  static ExperimentPlan anomaly_default();
  static ExperimentPlan from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct StructureCell {
  std::string method;  // method id plus eps0 suffix for baseline rows
  int d = 0;
  int run = 0;
  double alpha = 0.0;
  double achieved_density = 0.0;
  double eps_used = 0.0;
  bool converged = true;
  StructureMetrics metrics;
};

struct StructureResult {
  std::vector<StructureCell> cells;
  std::string to_csv() const;
  nlohmann::json summary() const;  // mean/std per (method, d), skipping flagged cells
};

StructureResult run_structure_experiment(const ExperimentPlan& plan);

struct AnomalyCell {
  std::string method;
  int d = 0;
  int run = 0;
  double best_alpha = 0.0;
  double best_auc = 0.0;
  bool converged = true;
};

struct AnomalyResult {
  std::vector<AnomalyCell> cells;
  std::string to_csv() const;
  nlohmann::json summary() const;  // median and quartiles per (method, d)
};

AnomalyResult run_anomaly_experiment(const ExperimentPlan& plan);

// Snap |entries| <= tol to exact zero (precision estimates carry ADMM noise
// on true zeros; the zero-pattern metrics test exact zeros).
Matrix truncated(const Matrix& m, double tol);

int blocks_for_dim(int d);

}  // namespace cssl::bench
