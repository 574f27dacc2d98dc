// SPDX-License-Identifier: Apache-2.0

#include "cssl/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "cssl/io.hpp"
#include "cssl/model_select.hpp"
#include "cssl/solver.hpp"
#include "cssl/synthgen.hpp"

namespace cssl::bench {

namespace {

std::vector<double> log_grid(double lo_exp, double hi_exp, int count) {
  std::vector<double> g(count);
  for (int k = 0; k < count; ++k)
    g[k] = std::pow(10.0, lo_exp + (hi_exp - lo_exp) * k / (count - 1));
  return g;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = base ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xc2b2ae3d27d4eb4fULL);
  return splitmix64(s);
}

// Deterministic job fan-out: results land in job-indexed slots, so worker
// count and scheduling never change the output.
template <class F>
void run_jobs(int count, int workers, F&& job) {
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, std::max(1, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

double parse_p(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInf;
    throw std::invalid_argument("plan: p must be 1, 2 or \"inf\"");
  }
  return j.get<double>();
}

nlohmann::json p_to_json(double p) {
  if (p == kInf) return "inf";
  return p;
}

std::string p_tag(double p) {
  if (p == kInf) return "pinf";
  if (p == 1.0) return "p1";
  return "p2";
}

std::string trim_num(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

struct FitOutput {
  std::vector<Matrix> lambdas;  // raw solver output
  bool converged = true;
};

// One method fit at one alpha; SICS runs N independent single-dataset fits.
FitOutput fit_method(const MethodSpec& m, const CovarianceSet& cov,
                     const ScaleLine& line, double alpha, int max_iter,
                     std::vector<Matrix>* warm) {
  const int n = cov.size();
  FitOutput out;
  SolverConfig cfg;
  cfg.max_iter = max_iter;
  auto run_one = [&](const CovarianceSet& c, const Hyperparams& hp,
                     std::vector<Matrix> warm_z) {
    cfg.warm_start_z = std::move(warm_z);
    try {
      return solve(c, hp, cfg);
    } catch (const NonConvergenceError& e) {
      out.converged = false;
      return e.best;
    }
  };

  if (m.method == "sics") {
    const Hyperparams hp = Hyperparams::create(alpha, kInf, 2.0);
    out.lambdas.resize(n);
    for (int i = 0; i < n; ++i) {
      CovarianceSet single = CovarianceSet::create({cov.matrices[i]}, {1.0});
      std::vector<Matrix> wz;
      if (warm && warm->size() == static_cast<std::size_t>(n)) wz = {(*warm)[i]};
      out.lambdas[i] = run_one(single, hp, std::move(wz)).decomp.lambda(0);
    }
    return out;
  }

  Hyperparams hp;
  if (m.method == "cssl") {
    const auto [rho, gamma] = params_from_alpha(line, alpha);
    hp = Hyperparams::create(rho, gamma, m.p);
  } else if (m.method == "cssl_pooled") {
    hp = Hyperparams::create(alpha, kInf, 2.0);
  } else if (m.method == "msics") {
    const double scale = std::pow(static_cast<double>(n), 1.0 / m.p);
    hp = Hyperparams::create(scale * alpha, alpha, m.p);
  } else {
    throw std::invalid_argument("plan: unknown method '" + m.method + "'");
  }
  std::vector<Matrix> wz;
  if (warm && warm->size() == static_cast<std::size_t>(n) && hp.gamma != kInf)
    wz = *warm;
  SolveResult r = run_one(cov, hp, std::move(wz));
  out.lambdas = r.decomp.lambdas();
  return out;
}

// Upper-triangle (diagonal included) fraction of entries with |.| > 1e-8,
// averaged over the estimate list.
double ut_density(const std::vector<Matrix>& mats) {
  const int d = static_cast<int>(mats.front().rows());
  const double slots = d * (d + 1) / 2.0;
  double acc = 0.0;
  for (const auto& m : mats) {
    long nz = 0;
    for (int c = 0; c < d; ++c)
      for (int r = 0; r <= c; ++r)
        if (std::fabs(m(r, c)) > 1e-8) ++nz;
    acc += nz / slots;
  }
  return acc / static_cast<double>(mats.size());
}

double quantile_sorted(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return 0.0;
  const double pos = q * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - lo;
  return v[lo] * (1.0 - w) + v[hi] * w;
}

}  // namespace

Matrix truncated(const Matrix& m, double tol) {
  Matrix out = m;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (std::fabs(out.data()[i]) <= tol) out.data()[i] = 0.0;
  return out;
}

int blocks_for_dim(int d) {
  if (d < 40) return 2;
  if (d < 75) return 3;
  return 4;
}

std::string MethodSpec::id() const {
  if (method == "cssl") return "cssl_" + p_tag(p);
  if (method == "cssl_pooled") return "cssl_pooled";
  if (method == "sics") return "sics";
  if (method == "msics") return "msics_" + p_tag(p);
  return method;
}

ExperimentPlan ExperimentPlan::structure_default() {
  ExperimentPlan plan;
  plan.alpha_grid = log_grid(-2.0, 0.0, 41);
  plan.methods = {
      {"cssl", 1.0, {}},        {"cssl", 2.0, {}},
      {"cssl", kInf, {}},       {"cssl_pooled", 2.0, {}},
      {"sics", 2.0, {0.5, 0.7, 0.9}}, {"msics", 2.0, {0.5, 0.7, 0.9}},
      {"msics", kInf, {0.5, 0.7, 0.9}},
  };
  return plan;
}

ExperimentPlan ExperimentPlan::anomaly_default() {
  ExperimentPlan plan;
  plan.dims = {20};
  plan.alpha_grid = log_grid(-1.5, -0.5, 11);
  plan.methods = {{"cssl", kInf, {}}, {"msics", 2.0, {}}};
  return plan;
}

ExperimentPlan ExperimentPlan::from_json(const nlohmann::json& j) {
  ExperimentPlan plan = structure_default();
  if (j.contains("dims")) plan.dims = j["dims"].get<std::vector<int>>();
  if (j.contains("n_datasets")) plan.n_datasets = j["n_datasets"];
  if (j.contains("runs")) plan.runs = j["runs"];
  if (j.contains("alpha_grid")) plan.alpha_grid = j["alpha_grid"].get<std::vector<double>>();
  if (j.contains("alpha_log_range")) {
    const auto& r = j["alpha_log_range"];
    plan.alpha_grid = log_grid(r[0], r[1], r[2]);
  }
  if (j.contains("methods")) {
    plan.methods.clear();
    for (const auto& mj : j["methods"]) {
      MethodSpec m;
      m.method = mj.at("method");
      if (mj.contains("p")) m.p = parse_p(mj["p"]);
      if (mj.contains("eps0s")) m.eps0s = mj["eps0s"].get<std::vector<double>>();
      plan.methods.push_back(std::move(m));
    }
  }
  if (j.contains("density_target")) plan.density_target = j["density_target"];
  if (j.contains("seed")) plan.seed = j["seed"];
  if (j.contains("n_per_d")) plan.n_per_d = j["n_per_d"];
  if (j.contains("cssl_eps")) plan.cssl_eps = j["cssl_eps"];
  if (j.contains("truncate_tol")) plan.truncate_tol = j["truncate_tol"];
  if (j.contains("diag_load")) plan.diag_load = j["diag_load"];
  if (j.contains("workers")) plan.workers = j["workers"];
  if (j.contains("max_iter")) plan.max_iter = j["max_iter"];
  if (j.contains("anomaly_normal")) plan.anomaly_normal = j["anomaly_normal"];
  if (j.contains("anomaly_faulty")) plan.anomaly_faulty = j["anomaly_faulty"];
  if (j.contains("anomaly_n_per_d")) plan.anomaly_n_per_d = j["anomaly_n_per_d"];
  if (j.contains("anomaly_inject")) plan.anomaly_inject = j["anomaly_inject"];
  if (j.contains("anomaly_diag_load")) plan.anomaly_diag_load = j["anomaly_diag_load"];
  return plan;
}

nlohmann::json ExperimentPlan::to_json() const {
  nlohmann::json j;
  j["dims"] = dims;
  j["n_datasets"] = n_datasets;
  j["runs"] = runs;
  j["alpha_grid"] = alpha_grid;
  j["methods"] = nlohmann::json::array();
  for (const auto& m : methods) {
    nlohmann::json mj;
    mj["method"] = m.method;
    mj["p"] = p_to_json(m.p);
    if (!m.eps0s.empty()) mj["eps0s"] = m.eps0s;
    j["methods"].push_back(mj);
  }
  j["density_target"] = density_target;
  j["seed"] = seed;
  j["n_per_d"] = n_per_d;
  j["cssl_eps"] = cssl_eps;
  j["truncate_tol"] = truncate_tol;
  j["diag_load"] = diag_load;
  j["workers"] = workers;
  j["max_iter"] = max_iter;
  j["anomaly_normal"] = anomaly_normal;
  j["anomaly_faulty"] = anomaly_faulty;
  j["anomaly_n_per_d"] = anomaly_n_per_d;
  j["anomaly_inject"] = anomaly_inject;
  j["anomaly_diag_load"] = anomaly_diag_load;
  return j;
}

StructureResult run_structure_experiment(const ExperimentPlan& plan) {
  struct Job {
    int d, run;
  };
  std::vector<Job> jobs;
  for (int d : plan.dims)
    for (int run = 0; run < plan.runs; ++run) jobs.push_back({d, run});

  std::vector<std::vector<StructureCell>> slots(jobs.size());

  run_jobs(static_cast<int>(jobs.size()), plan.workers, [&](int ji) {
    const auto [d, run] = jobs[ji];
    GenConfig gc;
    gc.d = d;
    gc.n_datasets = plan.n_datasets;
    gc.blocks = blocks_for_dim(d);
    gc.target_density = plan.density_target;
    gc.seed = derive_seed(plan.seed, static_cast<std::uint64_t>(d), run);
    gc.n_per_dataset = plan.n_per_d * d;
    const SyntheticFamily fam = generate_family(gc);

    std::vector<Matrix> covs(plan.n_datasets);
    for (int i = 0; i < plan.n_datasets; ++i)
      covs[i] = sample_covariance(fam.datasets[i], plan.diag_load);
    const CovarianceSet cov = CovarianceSet::create(
        covs, std::vector<double>(plan.n_datasets, 1.0 / plan.n_datasets));
    const ScaleLine line = fit_scale_line(cov);
    const double target_ut =
        (plan.density_target * d * d + d) / (static_cast<double>(d) * (d + 1));

    for (const auto& m : plan.methods) {
      // sweep alpha, warm-starting each fit from the previous one
      std::vector<FitOutput> fits(plan.alpha_grid.size());
      std::vector<Matrix> warm;
      for (std::size_t ai = 0; ai < plan.alpha_grid.size(); ++ai) {
        fits[ai] = fit_method(m, cov, line, plan.alpha_grid[ai], plan.max_iter,
                              warm.empty() ? nullptr : &warm);
        warm = fits[ai].lambdas;
      }
      // density-matched alpha selection on truncated estimates
      std::size_t best_ai = 0;
      double best_gap = kInf, best_density = 0.0;
      std::vector<std::vector<Matrix>> truncs(fits.size());
      for (std::size_t ai = 0; ai < fits.size(); ++ai) {
        truncs[ai].reserve(plan.n_datasets);
        for (const auto& lam : fits[ai].lambdas)
          truncs[ai].push_back(truncated(lam, plan.truncate_tol));
        const double dens = ut_density(truncs[ai]);
        const double gap = std::fabs(dens - target_ut);
        if (gap < best_gap - 1e-15) {  // ties keep the smaller alpha
          best_gap = gap;
          best_ai = ai;
          best_density = dens;
        }
      }
      const auto& est = truncs[best_ai];
      const double f0 = f0_measure(est, fam.precisions);

      auto push_cell = [&](const std::string& row_id, double eps) {
        StructureCell cell;
        cell.method = row_id;
        cell.d = d;
        cell.run = run;
        cell.alpha = plan.alpha_grid[best_ai];
        cell.achieved_density = best_density;
        cell.eps_used = eps;
        cell.converged = fits[best_ai].converged;
        cell.metrics = weighted_prf(est, fam.precisions, eps);
        cell.metrics.f0_measure = f0;
        slots[ji].push_back(std::move(cell));
      };

      if (m.method == "cssl" || m.method == "cssl_pooled") {
        push_cell(m.id(), plan.cssl_eps);
      } else {
        for (double eps0 : m.eps0s) {
          // quantile from the raw (untruncated) estimates, as in the paper
          const double eps = variation_quantile(fits[best_ai].lambdas, eps0);
          push_cell(m.id() + "_e" + trim_num(eps0), eps);
        }
      }
    }
  });

  StructureResult out;
  for (auto& s : slots)
    for (auto& c : s) out.cells.push_back(std::move(c));
  return out;
}

std::string StructureResult::to_csv() const {
  std::ostringstream ss;
  ss << "method,d,run,alpha,achieved_density,eps,converged,precision,recall,"
        "f_measure,f0_measure,wtp,wfp,wfn\n";
  for (const auto& c : cells) {
    ss << c.method << ',' << c.d << ',' << c.run << ',' << io::format_double(c.alpha)
       << ',' << io::format_double(c.achieved_density) << ','
       << io::format_double(c.eps_used) << ',' << (c.converged ? 1 : 0) << ','
       << io::format_double(c.metrics.precision) << ','
       << io::format_double(c.metrics.recall) << ','
       << io::format_double(c.metrics.f_measure) << ','
       << io::format_double(c.metrics.f0_measure) << ','
       << io::format_double(c.metrics.wtp) << ',' << io::format_double(c.metrics.wfp)
       << ',' << io::format_double(c.metrics.wfn) << '\n';
  }
  return ss.str();
}

nlohmann::json StructureResult::summary() const {
  struct Agg {
    std::vector<double> precision, recall, f, f0;
    int excluded = 0;
  };
  std::map<std::string, Agg> groups;
  for (const auto& c : cells) {
    auto& g = groups[c.method + "/d" + std::to_string(c.d)];
    if (!c.converged) {
      ++g.excluded;
      continue;
    }
    g.precision.push_back(c.metrics.precision);
    g.recall.push_back(c.metrics.recall);
    g.f.push_back(c.metrics.f_measure);
    g.f0.push_back(c.metrics.f0_measure);
  }
  auto mean_std = [](const std::vector<double>& v) {
    nlohmann::json j;
    if (v.empty()) {
      j["mean"] = nullptr;
      j["std"] = nullptr;
      return j;
    }
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    j["mean"] = mean;
    j["std"] = v.size() > 1 ? std::sqrt(var / (v.size() - 1)) : 0.0;
    return j;
  };
  nlohmann::json out;
  for (const auto& [key, g] : groups) {
    nlohmann::json cell;
    cell["precision"] = mean_std(g.precision);
    cell["recall"] = mean_std(g.recall);
    cell["f_measure"] = mean_std(g.f);
    cell["f0_measure"] = mean_std(g.f0);
    cell["cells"] = g.precision.size();
    cell["excluded_nonconverged"] = g.excluded;
    out[key] = cell;
  }
  return out;
}

AnomalyResult run_anomaly_experiment(const ExperimentPlan& plan) {
  struct Job {
    int d, run;
  };
  std::vector<Job> jobs;
  for (int d : plan.dims)
    for (int run = 0; run < plan.runs; ++run) jobs.push_back({d, run});
  std::vector<std::vector<AnomalyCell>> slots(jobs.size());

  run_jobs(static_cast<int>(jobs.size()), plan.workers, [&](int ji) {
    const auto [d, run] = jobs[ji];
    const int nn = plan.anomaly_normal, nf = plan.anomaly_faulty;
    Rng root(derive_seed(plan.seed, 0xa00 + static_cast<std::uint64_t>(d), run));

    GenConfig gc;
    gc.d = d;
    gc.n_datasets = 1;
    gc.blocks = blocks_for_dim(d);
    gc.target_density = plan.density_target;
    gc.seed = root.derive(1).next_u64();
    gc.sample_data = false;
    const Matrix lam_normal = generate_family(gc).precisions[0];

    // synthetic mis-wiring: exchange two variables' rows and columns
    Rng swap_rng = root.derive(2);
    int j1 = 0, j2 = 1;
    for (int tries = 0; tries < 64; ++tries) {
      j1 = static_cast<int>(swap_rng.uniform_int(0, d - 1));
      j2 = static_cast<int>(swap_rng.uniform_int(0, d - 2));
      if (j2 >= j1) ++j2;
      Matrix probe = lam_normal;
      probe.row(j1).swap(probe.row(j2));
      probe.col(j1).swap(probe.col(j2));
      if ((probe - lam_normal).cwiseAbs().maxCoeff() > 1e-9) break;
    }
    Matrix lam_faulty = lam_normal;
    if (plan.anomaly_inject) {
      lam_faulty.row(j1).swap(lam_faulty.row(j2));
      lam_faulty.col(j1).swap(lam_faulty.col(j2));
    }

    const int n_samples = plan.anomaly_n_per_d * d;
    std::vector<Matrix> covs;
    std::vector<double> weights;
    for (int i = 0; i < nn; ++i) {
      Rng s = root.derive(100 + i);
      covs.push_back(sample_covariance(sample_gaussian(lam_normal, n_samples, s),
                                       plan.anomaly_diag_load));
      weights.push_back(1.0 / (2.0 * nn));
    }
    for (int i = 0; i < nf; ++i) {
      Rng s = root.derive(200 + i);
      covs.push_back(sample_covariance(sample_gaussian(lam_faulty, n_samples, s),
                                       plan.anomaly_diag_load));
      weights.push_back(1.0 / (2.0 * nf));
    }
    const CovarianceSet cov = CovarianceSet::create(covs, weights);
    const ScaleLine line = fit_scale_line(cov);
    std::vector<int> labels(d, 0);
    labels[j1] = labels[j2] = 1;

    for (const auto& m : plan.methods) {
      AnomalyCell cell;
      cell.method = m.id();
      cell.d = d;
      cell.run = run;
      double best_auc = -1.0, best_alpha = 0.0;
      bool all_ok = true;
      std::vector<Matrix> warm;
      for (double alpha : plan.alpha_grid) {
        FitOutput fit = fit_method(m, cov, line, alpha, plan.max_iter,
                                   warm.empty() ? nullptr : &warm);
        warm = fit.lambdas;
        all_ok = all_ok && fit.converged;
        Vector avg = Vector::Zero(d);
        for (int i = 0; i < nn; ++i)
          for (int k = 0; k < nf; ++k)
            avg += anomaly_score_pair(fit.lambdas[i], fit.lambdas[nn + k]).scores;
        avg /= static_cast<double>(nn * nf);
        const double auc = roc_auc(avg, labels);
        if (auc > best_auc) {
          best_auc = auc;
          best_alpha = alpha;
        }
      }
      cell.best_auc = best_auc;
      cell.best_alpha = best_alpha;
      cell.converged = all_ok;
      slots[ji].push_back(std::move(cell));
    }
  });

  AnomalyResult out;
  for (auto& s : slots)
    for (auto& c : s) out.cells.push_back(std::move(c));
  return out;
}

std::string AnomalyResult::to_csv() const {
  std::ostringstream ss;
  ss << "method,d,run,best_alpha,best_auc,converged\n";
  for (const auto& c : cells)
    ss << c.method << ',' << c.d << ',' << c.run << ','
       << io::format_double(c.best_alpha) << ',' << io::format_double(c.best_auc)
       << ',' << (c.converged ? 1 : 0) << '\n';
  return ss.str();
}

nlohmann::json AnomalyResult::summary() const {
  std::map<std::string, std::vector<double>> groups;
  std::map<std::string, int> excluded;
  for (const auto& c : cells) {
    const std::string key = c.method + "/d" + std::to_string(c.d);
    if (!c.converged) {
      ++excluded[key];
      continue;
    }
    groups[key].push_back(c.best_auc);
  }
  nlohmann::json out;
  for (const auto& [key, v] : groups) {
    nlohmann::json cell;
    cell["median_best_auc"] = quantile_sorted(v, 0.5);
    cell["q25"] = quantile_sorted(v, 0.25);
    cell["q75"] = quantile_sorted(v, 0.75);
    cell["cells"] = v.size();
    cell["excluded_nonconverged"] = excluded.count(key) ? excluded[key] : 0;
    out[key] = cell;
  }
  return out;
}

}  // namespace cssl::bench
