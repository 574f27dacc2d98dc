// SPDX-License-Identifier: Apache-2.0
//
// cssl command line: generate / fit / extract / evaluate / anomaly / bench /
// heuristic pipelines over the CSV + JSON formats documented in the README.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "cssl/bench.hpp"
#include "cssl/io.hpp"
#include "cssl/model_select.hpp"
#include "cssl/solver.hpp"
#include "cssl/synthgen.hpp"

namespace fs = std::filesystem;
using namespace cssl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitNonConverged = 2;

double parse_gamma(const std::string& s) {
  if (s == "inf") return kInf;
  return std::stod(s);
}

double parse_p(const std::string& s) {
  if (s == "inf") return kInf;
  const double p = std::stod(s);
  if (p != 1.0 && p != 2.0) throw CLI::ValidationError("p must be 1, 2 or inf");
  return p;
}

int default_workers() {
  if (const char* env = std::getenv("CSSL_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  return 0;  // bench resolves 0 to hardware concurrency
}

std::vector<Matrix> read_matrix_list(const std::vector<std::string>& files) {
  std::vector<Matrix> out;
  for (const auto& f : files) out.push_back(io::read_matrix_csv(f));
  return out;
}

void write_fit_artifacts(const fs::path& dir, const PrecisionDecomposition& decomp,
                         const SolveDiagnostics& diag, const nlohmann::json& hyper) {
  fs::create_directories(dir);
  io::write_matrix_csv(dir / "theta.csv", decomp.theta);
  for (int i = 0; i < decomp.size(); ++i) {
    io::write_matrix_csv(dir / ("omega_" + std::to_string(i + 1) + ".csv"),
                         decomp.omegas[i]);
    io::write_matrix_csv(dir / ("lambda_" + std::to_string(i + 1) + ".csv"),
                         decomp.lambda(i));
  }
  nlohmann::json j = diag.to_json();
  j["hyperparams"] = hyper;
  io::write_text(dir / "diagnostics.json", j.dump(2) + "\n");
}

void write_common_structure(const fs::path& dir, const CommonStructure& cs) {
  fs::create_directories(dir);
  io::write_matrix_csv(dir / "common_support.csv", cs.support.cast<double>());
  io::write_matrix_csv(dir / "common_theta.csv", cs.theta_hat);
  nlohmann::json edges = nlohmann::json::array();
  const int d = static_cast<int>(cs.support.rows());
  for (int c = 0; c < d; ++c)
    for (int r = 0; r <= c; ++r)
      if (cs.support(r, c)) {
        nlohmann::json e;
        e["j"] = r;
        e["j2"] = c;
        e["value"] = cs.theta_hat(r, c);
        edges.push_back(e);
      }
  io::write_text(dir / "common_edges.json", edges.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"common substructure learning for multiple graphical Gaussian models"};
  app.require_subcommand(1);

  // ---- generate ----
  auto* gen = app.add_subcommand("generate", "generate a synthetic family");
  GenConfig gc;
  int gen_blocks = -1;
  double gen_diag_load = 0.0;
  std::string gen_out = "family";
  gen->add_option("--d", gc.d, "dimension");
  gen->add_option("--n-datasets", gc.n_datasets, "number of datasets N");
  gen->add_option("--blocks", gen_blocks, "block count a (-1 = by dimension)");
  gen->add_option("--coupling-rank", gc.coupling_rank, "bridge rank b");
  gen->add_option("--density", gc.target_density, "target nonzero fraction");
  gen->add_option("--eig-floor", gc.eig_floor, "eigenvalue floor");
  gen->add_option("--seed", gc.seed, "RNG seed");
  gen->add_option("--n-samples", gc.n_per_dataset, "samples per dataset (-1 = 5d)");
  gen->add_option("--diag-load", gen_diag_load, "diagonal loading for the covariances");
  gen->add_option("--out", gen_out, "output directory");

  // ---- fit ----
  auto* fit = app.add_subcommand("fit", "solve the common-substructure problem");
  std::string fit_manifest, fit_gamma = "inf", fit_p = "2", fit_out = "fit";
  double fit_rho = -1.0, fit_alpha = -1.0;
  bool fit_heuristic = false, fit_no_diag = false, fit_no_adapt = false;
  SolverConfig fit_cfg;
  fit->add_option("--manifest", fit_manifest, "covariance-set manifest")->required();
  fit->add_option("--rho", fit_rho, "l1 weight on the common part");
  fit->add_option("--gamma", fit_gamma, "group weight on the individual parts (or 'inf')");
  fit->add_option("--p", fit_p, "group norm order: 1, 2 or inf");
  fit->add_option("--alpha", fit_alpha, "heuristic scale parameter");
  fit->add_flag("--heuristic", fit_heuristic, "derive rho/gamma from alpha");
  fit->add_flag("--no-penalize-diagonal", fit_no_diag, "penalize off-diagonals only");
  fit->add_option("--max-iter", fit_cfg.max_iter, "iteration cap");
  fit->add_option("--eps-gap", fit_cfg.eps_gap, "duality-gap tolerance (default 1e-5*d)");
  fit->add_option("--eps-pdgap", fit_cfg.eps_pdgap, "primal/dual gap tolerance");
  fit->add_option("--beta0", fit_cfg.beta0, "initial penalty");
  fit->add_flag("--no-adapt-beta", fit_no_adapt, "freeze the penalty");
  fit->add_option("--threads", fit_cfg.threads, "solver worker count");
  fit->add_option("--out", fit_out, "output directory");

  // ---- extract ----
  auto* ext = app.add_subcommand("extract", "extract the common substructure");
  std::string ext_mode = "exact", ext_fit_dir, ext_out = "common";
  std::vector<std::string> ext_precisions;
  double ext_zero_tol = 1e-6, ext_eps0 = 0.5;
  ext->add_option("--mode", ext_mode, "exact | threshold");
  ext->add_option("--fit-dir", ext_fit_dir, "fit output directory (exact mode)");
  ext->add_option("--precisions", ext_precisions, "precision CSVs (threshold mode)");
  ext->add_option("--zero-tol", ext_zero_tol, "zero tolerance (exact mode)");
  ext->add_option("--eps0", ext_eps0, "variation quantile (threshold mode)");
  ext->add_option("--out", ext_out, "output directory");

  // ---- evaluate ----
  auto* ev = app.add_subcommand("evaluate", "structure-recovery metrics");
  std::vector<std::string> ev_est, ev_truth;
  double ev_eps = -1.0, ev_eps0 = -1.0, ev_trunc = 0.0;
  std::string ev_out = "metrics.json";
  ev->add_option("--estimates", ev_est, "estimated precision CSVs")->required();
  ev->add_option("--truth", ev_truth, "true precision CSVs")->required();
  ev->add_option("--eps", ev_eps, "commonness threshold");
  ev->add_option("--eps0", ev_eps0, "derive eps as this variation quantile");
  ev->add_option("--truncate", ev_trunc, "snap |entries| <= tol to zero first");
  ev->add_option("--out", ev_out, "metrics JSON path");

  // ---- anomaly ----
  auto* an = app.add_subcommand("anomaly", "correlation-anomaly scores for a pair");
  std::string an_a, an_b, an_labels, an_out = "anomaly.csv";
  an->add_option("--a", an_a, "precision CSV, dataset A")->required();
  an->add_option("--b", an_b, "precision CSV, dataset B")->required();
  an->add_option("--labels", an_labels, "0/1 labels CSV (one row or column)");
  an->add_option("--out", an_out, "score CSV path");

  // ---- bench ----
  auto* be = app.add_subcommand("bench", "run an experiment plan");
  std::string be_plan, be_mode = "structure", be_out = "bench";
  int be_workers = default_workers();
  be->add_option("--plan", be_plan, "plan JSON (omit for the desk-scale default)");
  be->add_option("--mode", be_mode, "structure | anomaly");
  be->add_option("--workers", be_workers, "worker count (0 = all cores)");
  be->add_option("--out", be_out, "output directory");

  // ---- heuristic ----
  auto* he = app.add_subcommand("heuristic", "fit the rho/gamma scale line");
  std::string he_manifest;
  std::vector<double> he_alphas;
  he->add_option("--manifest", he_manifest, "covariance-set manifest")->required();
  he->add_option("--alpha", he_alphas, "alphas to map through the line");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      gc.blocks = gen_blocks > 0 ? gen_blocks : bench::blocks_for_dim(gc.d);
      const SyntheticFamily fam = generate_family(gc);
      export_family(fam, gen_out);
      std::vector<std::string> cov_files;
      for (int i = 0; i < fam.config.n_datasets; ++i) {
        const std::string name = "cov_" + std::to_string(i + 1) + ".csv";
        io::write_matrix_csv(fs::path(gen_out) / name,
                             sample_covariance(fam.datasets[i], gen_diag_load));
        cov_files.push_back(name);
      }
      io::write_covariance_manifest(
          fs::path(gen_out) / "manifest.json", cov_files,
          std::vector<double>(cov_files.size(), 1.0 / cov_files.size()),
          std::vector<int>(cov_files.size(), fam.config.samples()));
      std::cout << "family written to " << gen_out << "\n";
      return kExitOk;
    }

    if (*fit) {
      const CovarianceSet cov = io::read_covariance_manifest(fit_manifest);
      nlohmann::json hyper;
      double rho, gamma;
      if (fit_heuristic || fit_alpha > 0.0) {
        if (fit_alpha <= 0.0)
          throw std::invalid_argument("--heuristic requires --alpha > 0");
        const ScaleLine line = fit_scale_line(cov);
        std::tie(rho, gamma) = params_from_alpha(line, fit_alpha);
        hyper["heuristic"] = true;
        hyper["alpha"] = fit_alpha;
        hyper["s0"] = line.s0;
        hyper["s1"] = line.s1;
      } else {
        if (fit_rho < 0.0)
          throw std::invalid_argument("provide --rho/--gamma or --alpha --heuristic");
        rho = fit_rho;
        gamma = parse_gamma(fit_gamma);
        hyper["heuristic"] = false;
      }
      const double p = parse_p(fit_p);
      hyper["rho"] = rho;
      hyper["gamma"] = gamma == kInf ? nlohmann::json("inf") : nlohmann::json(gamma);
      hyper["p"] = p == kInf ? nlohmann::json("inf") : nlohmann::json(p);
      hyper["penalize_diagonal"] = !fit_no_diag;
      const Hyperparams hp = Hyperparams::create(rho, gamma, p, !fit_no_diag);
      fit_cfg.adapt_beta = !fit_no_adapt;
      try {
        const SolveResult res = solve(cov, hp, fit_cfg);
        write_fit_artifacts(fit_out, res.decomp, res.diagnostics, hyper);
        std::cout << "converged in " << res.diagnostics.iterations << " iterations\n";
        return kExitOk;
      } catch (const NonConvergenceError& e) {
        write_fit_artifacts(fit_out, e.best.decomp, e.best.diagnostics, hyper);
        std::cerr << "did not converge: " << e.what() << " (best iterate written)\n";
        return kExitNonConverged;
      }
    }

    if (*ext) {
      if (ext_mode == "exact") {
        if (ext_fit_dir.empty())
          throw std::invalid_argument("exact mode requires --fit-dir");
        PrecisionDecomposition decomp;
        decomp.theta = io::read_matrix_csv(fs::path(ext_fit_dir) / "theta.csv");
        for (int i = 1;; ++i) {
          const fs::path f =
              fs::path(ext_fit_dir) / ("omega_" + std::to_string(i) + ".csv");
          if (!fs::exists(f)) break;
          decomp.omegas.push_back(io::read_matrix_csv(f));
        }
        if (decomp.omegas.empty())
          throw std::invalid_argument("no omega_i.csv files under " + ext_fit_dir);
        write_common_structure(ext_out, extract_common_exact(decomp, ext_zero_tol));
      } else if (ext_mode == "threshold") {
        if (ext_precisions.size() < 2)
          throw std::invalid_argument("threshold mode requires >= 2 --precisions");
        write_common_structure(
            ext_out, extract_common_threshold(read_matrix_list(ext_precisions), ext_eps0));
      } else {
        throw std::invalid_argument("unknown extract mode '" + ext_mode + "'");
      }
      std::cout << "common structure written to " << ext_out << "\n";
      return kExitOk;
    }

    if (*ev) {
      std::vector<Matrix> est = read_matrix_list(ev_est);
      const std::vector<Matrix> truth = read_matrix_list(ev_truth);
      if (ev_trunc > 0.0)
        for (auto& m : est) m = bench::truncated(m, ev_trunc);
      double eps = ev_eps;
      if (ev_eps0 > 0.0)
        eps = variation_quantile(est, ev_eps0);
      else if (eps < 0.0)
        eps = 1e-8;
      StructureMetrics metrics = weighted_prf(est, truth, eps);
      metrics.f0_measure = f0_measure(est, truth);
      nlohmann::json j = metrics.to_json();
      j["eps"] = eps;
      io::write_text(ev_out, j.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
      return kExitOk;
    }

    if (*an) {
      const Matrix a = io::read_matrix_csv(an_a);
      const Matrix b = io::read_matrix_csv(an_b);
      AnomalyReport rep = anomaly_score_pair(a, b);
      std::ostringstream csv;
      csv << "j,d_ab,d_ba,a_j\n";
      for (int j = 0; j < rep.scores.size(); ++j)
        csv << j << ',' << io::format_double(rep.per_direction(j, 0)) << ','
            << io::format_double(rep.per_direction(j, 1)) << ','
            << io::format_double(rep.scores[j]) << '\n';
      io::write_text(an_out, csv.str());
      if (!an_labels.empty()) {
        const Matrix lm = io::read_matrix_csv(an_labels);
        std::vector<int> labels(lm.size());
        for (Eigen::Index i = 0; i < lm.size(); ++i)
          labels[i] = lm.data()[i] != 0.0 ? 1 : 0;
        std::cout << "auc " << io::format_double(roc_auc(rep.scores, labels)) << "\n";
      }
      std::cout << "scores written to " << an_out << "\n";
      return kExitOk;
    }

    if (*be) {
      bench::ExperimentPlan plan = be_mode == "anomaly"
                                        ? bench::ExperimentPlan::anomaly_default()
                                        : bench::ExperimentPlan::structure_default();
      if (!be_plan.empty()) {
        std::ifstream in(be_plan);
        if (!in) throw std::invalid_argument("cannot open plan " + be_plan);
        nlohmann::json j;
        in >> j;
        plan = bench::ExperimentPlan::from_json(j);
        if (plan.alpha_grid.empty())
          plan.alpha_grid = (be_mode == "anomaly"
                                 ? bench::ExperimentPlan::anomaly_default()
                                 : bench::ExperimentPlan::structure_default())
                                .alpha_grid;
      }
      if (be_workers > 0) plan.workers = be_workers;
      fs::create_directories(be_out);
      io::write_text(fs::path(be_out) / "plan.json", plan.to_json().dump(2) + "\n");
      if (be_mode == "structure") {
        const bench::StructureResult res = bench::run_structure_experiment(plan);
        io::write_text(fs::path(be_out) / "results.csv", res.to_csv());
        io::write_text(fs::path(be_out) / "summary.json", res.summary().dump(2) + "\n");
      } else if (be_mode == "anomaly") {
        const bench::AnomalyResult res = bench::run_anomaly_experiment(plan);
        io::write_text(fs::path(be_out) / "results.csv", res.to_csv());
        io::write_text(fs::path(be_out) / "summary.json", res.summary().dump(2) + "\n");
      } else {
        throw std::invalid_argument("unknown bench mode '" + be_mode + "'");
      }
      std::cout << "results written to " << be_out << "\n";
      return kExitOk;
    }

    if (*he) {
      const CovarianceSet cov = io::read_covariance_manifest(he_manifest);
      const ScaleLine line = fit_scale_line(cov);
      std::cout << "s0 " << io::format_double(line.s0) << "\ns1 "
                << io::format_double(line.s1) << "\n";
      for (double alpha : he_alphas) {
        const auto [rho, gamma] = params_from_alpha(line, alpha);
        std::cout << "alpha " << io::format_double(alpha) << " rho "
                  << io::format_double(rho) << " gamma " << io::format_double(gamma)
                  << "\n";
      }
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}
