// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>

#include "cssl/rng.hpp"
#include "cssl/types.hpp"

namespace cssl {

struct GenConfig {
  int d = 25;
  int n_datasets = 5;
  int blocks = 2;            // a
  int coupling_rank = 2;     // b
  double target_density = 0.15;  // fraction of nonzero entries of each Lambda_i
  double eig_floor = 0.05;
  std::uint64_t seed = 0;
  int n_per_dataset = -1;    // -1 selects 5*d
  bool sample_data = true;

  int samples() const { return n_per_dataset < 0 ? 5 * d : n_per_dataset; }
};

struct SyntheticFamily {
  std::vector<Matrix> precisions;   // N PD matrices sharing the block support
  Eigen::MatrixXi common_mask;      // support of the shared block diagonal
  std::vector<Dataset> datasets;
  std::vector<double> achieved_density;
  bool density_warning = false;
  GenConfig config;
};

// Random Givens rotations applied to I until the fill of V itself reaches
// target_fill (fraction of nonzero entries) or the rotation budget runs out.
Matrix givens_sparse_orthonormal(int dim, double target_fill, Rng& rng);

// V D V^T with eigenvalues U([eig_floor, 1]) and rotations applied until the
// matrix density reaches `density` (best effort within the budget).
Matrix sparse_precision(int dim, double density, double eig_floor, Rng& rng);

// Couples two PD blocks through a rank-b bridge built from leading
// eigencolumns; returns the stacked matrix and the mask of bridge entries.
std::pair<Matrix, Eigen::MatrixXi> couple_blocks(const Matrix& psi1, const Matrix& psi2,
                                                 int b, Rng& rng);

SyntheticFamily generate_family(const GenConfig& config);

// n i.i.d. draws from N(0, precision^{-1})
Dataset sample_gaussian(const Matrix& precision, int n, Rng& rng);

// precision_i.csv, dataset_i.csv, common_mask.csv, meta.json
void export_family(const SyntheticFamily& family, const std::filesystem::path& dir);

}  // namespace cssl
