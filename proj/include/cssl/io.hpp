// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "cssl/types.hpp"

namespace cssl::io {

// Decimal formatting for every file we emit: 17 significant digits, which
// round-trips IEEE doubles and keeps outputs byte-stable for a fixed seed.
std::string format_double(double v);

// Dense CSV, one row per line, comma separated, no header.
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

Dataset read_dataset_csv(const std::filesystem::path& path, bool centered = true);

// Covariance-set manifest: JSON with matrix file paths (relative to the
// manifest), weights, and optional per-dataset sample counts.
CovarianceSet read_covariance_manifest(const std::filesystem::path& path);
void write_covariance_manifest(const std::filesystem::path& path,
                               const std::vector<std::string>& matrix_files,
                               const std::vector<double>& weights,
                               const std::optional<std::vector<int>>& n_points);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace cssl::io
