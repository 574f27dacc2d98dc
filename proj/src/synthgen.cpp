// SPDX-License-Identifier: Apache-2.0

#include "cssl/synthgen.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "cssl/io.hpp"

namespace cssl {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Row supports as bit words; a Givens rotation on rows (j, j') generically
// unions their supports.
struct SupportTracker {
  int dim, words;
  std::vector<std::uint64_t> bits;  // dim * words

  explicit SupportTracker(int d) : dim(d), words((d + 63) / 64), bits(d * words, 0) {
    for (int j = 0; j < d; ++j) set(j, j);
  }
  void set(int row, int col) { bits[row * words + col / 64] |= 1ULL << (col % 64); }
  void merge(int j, int j2) {
    for (int w = 0; w < words; ++w) {
      const std::uint64_t u = bits[j * words + w] | bits[j2 * words + w];
      bits[j * words + w] = u;
      bits[j2 * words + w] = u;
    }
  }
  bool overlaps(int j, int j2) const {
    for (int w = 0; w < words; ++w)
      if (bits[j * words + w] & bits[j2 * words + w]) return true;
    return false;
  }
  int row_count(int j) const {
    int c = 0;
    for (int w = 0; w < words; ++w) c += std::popcount(bits[j * words + w]);
    return c;
  }
};

void apply_givens(Matrix& v, int j, int j2, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  for (int col = 0; col < v.cols(); ++col) {
    const double a = v(j, col), b = v(j2, col);
    v(j, col) = c * a - s * b;
    v(j2, col) = s * a + c * b;
  }
}

int rotation_budget(int d) { return 20 * d * d; }

}  // namespace

Matrix givens_sparse_orthonormal(int dim, double target_fill, Rng& rng) {
  if (!(target_fill > 0.0) || target_fill > 1.0)
    throw std::invalid_argument("givens_sparse_orthonormal: fill in (0,1] required");
  Matrix v = Matrix::Identity(dim, dim);
  if (dim < 2) return v;
  SupportTracker sup(dim);
  int nnz = dim;
  const int budget = rotation_budget(dim);
  for (int it = 0; it < budget && nnz < target_fill * dim * dim; ++it) {
    const int j = static_cast<int>(rng.uniform_int(0, dim - 1));
    int j2 = static_cast<int>(rng.uniform_int(0, dim - 2));
    if (j2 >= j) ++j2;
    const double theta = rng.uniform(0.0, kTwoPi);
    apply_givens(v, j, j2, theta);
    nnz -= sup.row_count(j) + sup.row_count(j2);
    sup.merge(j, j2);
    nnz += 2 * sup.row_count(j);
  }
  return v;
}

Matrix sparse_precision(int dim, double density, double eig_floor, Rng& rng) {
  if (!(density > 0.0) || !(density < 1.0))
    throw std::invalid_argument("sparse_precision: density in (0,1) required");
  if (!(eig_floor > 0.0))
    throw std::invalid_argument("sparse_precision: eig_floor > 0 required");
  Vector evals(dim);
  for (int i = 0; i < dim; ++i) evals[i] = rng.uniform(eig_floor, 1.0);

  Matrix v = Matrix::Identity(dim, dim);
  SupportTracker sup(dim);
  // pair overlap count drives the density of V D V^T: entry (j,k) is
  // generically nonzero iff rows j and k of V share a support column
  long nnz_lambda = dim;
  const long target = static_cast<long>(std::ceil(density * dim * dim));
  const int budget = rotation_budget(dim);
  for (int it = 0; it < budget && nnz_lambda < target && dim >= 2; ++it) {
    const int j = static_cast<int>(rng.uniform_int(0, dim - 1));
    int j2 = static_cast<int>(rng.uniform_int(0, dim - 2));
    if (j2 >= j) ++j2;
    const double theta = rng.uniform(0.0, kTwoPi);
    apply_givens(v, j, j2, theta);
    long before = 0, after = 0;
    for (int k = 0; k < dim; ++k) {
      if (k != j && sup.overlaps(j, k)) before += 2;
      if (k != j2 && sup.overlaps(j2, k)) before += 2;
    }
    if (sup.overlaps(j, j2)) before -= 2;  // counted from both sides
    sup.merge(j, j2);
    for (int k = 0; k < dim; ++k) {
      if (k != j && sup.overlaps(j, k)) after += 2;
      if (k != j2 && sup.overlaps(j2, k)) after += 2;
    }
    after -= 2;  // (j, j2) and (j2, j) now always overlap, counted twice
    nnz_lambda += after - before;
  }
  Matrix lambda = v * evals.asDiagonal() * v.transpose();
  return 0.5 * (lambda + lambda.transpose());
}

std::pair<Matrix, Eigen::MatrixXi> couple_blocks(const Matrix& psi1, const Matrix& psi2,
                                                 int b, Rng& rng) {
  const int d1 = static_cast<int>(psi1.rows());
  const int d2 = static_cast<int>(psi2.rows());
  if (b < 1 || b > std::min(d1, d2))
    throw std::invalid_argument("couple_blocks: need 1 <= b <= min(dim1, dim2)");
  Eigen::SelfAdjointEigenSolver<Matrix> es1(psi1), es2(psi2);
  if (es1.eigenvalues().minCoeff() <= 0.0 || es2.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("couple_blocks: blocks must be positive definite");

  // candidate pools: eigenvalues in the top 1/3, at least b of them
  auto pick = [&](int dim) {
    const int pool = std::max(b, (dim + 2) / 3);
    std::vector<int> idx(pool);
    // eigenvalues are ascending; the pool is the trailing block
    for (int k = 0; k < pool; ++k) idx[k] = dim - pool + k;
    for (int k = 0; k < b; ++k) {
      const int swap =
          k + static_cast<int>(rng.uniform_int(0, static_cast<std::uint64_t>(pool - 1 - k)));
      std::swap(idx[k], idx[swap]);
    }
    idx.resize(b);
    return idx;
  };
  const std::vector<int> pi1 = pick(d1);
  const std::vector<int> pi2 = pick(d2);

  Matrix phi = Matrix::Zero(d1, d2);
  for (int m = 0; m < b; ++m) {
    const double s1 = es1.eigenvalues()[pi1[m]];
    const double s2 = es2.eigenvalues()[pi2[m]];
    const double mag = rng.uniform(0.5, 0.8);
    const double sign = rng.uniform_int(0, 1) ? 1.0 : -1.0;
    const double xi = sign * mag * std::sqrt(s1 * s2);
    if (!(xi * xi < s1 * s2))
      throw std::logic_error("couple_blocks: PD margin violated");
    phi += xi * es1.eigenvectors().col(pi1[m]) * es2.eigenvectors().col(pi2[m]).transpose();
  }

  const int d = d1 + d2;
  Matrix out(d, d);
  out.topLeftCorner(d1, d1) = psi1;
  out.bottomRightCorner(d2, d2) = psi2;
  out.topRightCorner(d1, d2) = phi;
  out.bottomLeftCorner(d2, d1) = phi.transpose();

  Eigen::SelfAdjointEigenSolver<Matrix> check(out, Eigen::EigenvaluesOnly);
  if (check.eigenvalues().minCoeff() <= 0.0)
    throw std::logic_error("couple_blocks: coupled matrix lost positive definiteness");

  Eigen::MatrixXi mask = Eigen::MatrixXi::Zero(d, d);
  for (int r = 0; r < d1; ++r)
    for (int c = 0; c < d2; ++c)
      if (phi(r, c) != 0.0) {
        mask(r, d1 + c) = 1;
        mask(d1 + c, r) = 1;
      }
  return {out, mask};
}

SyntheticFamily generate_family(const GenConfig& config) {
  if (config.blocks < 1 || config.coupling_rank < 1)
    throw std::invalid_argument("generate_family: a >= 1 and b >= 1 required");
  if (!(config.target_density > 0.0) || !(config.target_density < 1.0))
    throw std::invalid_argument("generate_family: target_density in (0,1) required");
  const int d = config.d;
  const int a = config.blocks;
  const int n = config.n_datasets;
  const Rng root(config.seed);

  std::vector<int> sizes(a, d / a);
  for (int k = 0; k < d % a; ++k) ++sizes[k];
  if (sizes.back() < 1) throw std::invalid_argument("generate_family: more blocks than dims");

  SyntheticFamily fam;
  fam.config = config;
  double fill = (a == 1) ? config.target_density
                         : std::min(0.95, 0.8 * a * config.target_density);
  constexpr int kMaxAttempts = 4;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::vector<Matrix> psis(a);
    for (int k = 0; k < a; ++k) {
      Rng stream = root.derive(1'000'000ULL * attempt + 1'000ULL + k);
      psis[k] = sparse_precision(sizes[k], fill, config.eig_floor, stream);
    }
    std::vector<Matrix> lambdas(n);
    for (int i = 0; i < n; ++i) {
      Matrix cur = psis[0];
      for (int k = 1; k < a; ++k) {
        Rng stream = root.derive(1'000'000ULL * attempt + 10'000ULL + 100ULL * i + k);
        cur = couple_blocks(cur, psis[k], config.coupling_rank, stream).first;
      }
      lambdas[i] = std::move(cur);
    }
    std::vector<double> dens(n);
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
      dens[i] = static_cast<double>((lambdas[i].array() != 0.0).count()) / (d * d);
      mean += dens[i] / n;
    }
    const bool ok = std::fabs(mean - config.target_density) <= 0.25 * config.target_density;
    if (ok || attempt == kMaxAttempts - 1) {
      fam.precisions = std::move(lambdas);
      fam.achieved_density = std::move(dens);
      fam.density_warning = !ok;
      break;
    }
    fill = std::clamp(fill * config.target_density / mean, 0.02, 0.95);
  }

  // shared support: the block diagonal, bitwise identical across the family
  fam.common_mask = Eigen::MatrixXi::Zero(d, d);
  int off = 0;
  for (int k = 0; k < a; ++k) {
    for (int r = 0; r < sizes[k]; ++r)
      for (int c = 0; c < sizes[k]; ++c)
        if (fam.precisions[0](off + r, off + c) != 0.0)
          fam.common_mask(off + r, off + c) = 1;
    off += sizes[k];
  }

  if (config.sample_data) {
    fam.datasets.resize(n);
    for (int i = 0; i < n; ++i) {
      Rng stream = root.derive(500'000'000ULL + i);
      fam.datasets[i] = sample_gaussian(fam.precisions[i], config.samples(), stream);
    }
  }
  return fam;
}

Dataset sample_gaussian(const Matrix& precision, int n, Rng& rng) {
  if (n < 0) throw std::invalid_argument("sample_gaussian: n >= 0 required");
  const int d = static_cast<int>(precision.rows());
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("sample_gaussian: precision not positive definite");
  // x = L^{-T} z has covariance (L L^T)^{-1} = precision^{-1}
  const Matrix l = llt.matrixL();
  Dataset out;
  out.samples = Matrix(n, d);
  out.centered = true;
  Vector z(d);
  for (int s = 0; s < n; ++s) {
    for (int j = 0; j < d; ++j) z[j] = rng.normal();
    out.samples.row(s) = l.transpose().triangularView<Eigen::Upper>().solve(z).transpose();
  }
  return out;
}

void export_family(const SyntheticFamily& family, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const int n = static_cast<int>(family.precisions.size());
  for (int i = 0; i < n; ++i) {
    io::write_matrix_csv(dir / ("precision_" + std::to_string(i + 1) + ".csv"),
                         family.precisions[i]);
    if (i < static_cast<int>(family.datasets.size()))
      io::write_matrix_csv(dir / ("dataset_" + std::to_string(i + 1) + ".csv"),
                           family.datasets[i].samples);
  }
  io::write_matrix_csv(dir / "common_mask.csv", family.common_mask.cast<double>());
  nlohmann::json meta;
  meta["d"] = family.config.d;
  meta["n_datasets"] = family.config.n_datasets;
  meta["blocks"] = family.config.blocks;
  meta["coupling_rank"] = family.config.coupling_rank;
  meta["target_density"] = family.config.target_density;
  meta["eig_floor"] = family.config.eig_floor;
  meta["seed"] = family.config.seed;
  meta["n_per_dataset"] = family.config.samples();
  meta["achieved_density"] = family.achieved_density;
  meta["density_warning"] = family.density_warning;
  meta["rng"] = kRngId;
  io::write_text(dir / "meta.json", meta.dump(2) + "\n");
}

}  // namespace cssl
