// SPDX-License-Identifier: Apache-2.0

#include "cssl/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cssl::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error("bad numeric cell '" + cell + "' in " + path.string());
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("ragged rows in " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("empty matrix file " + path.string());
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

Dataset read_dataset_csv(const std::filesystem::path& path, bool centered) {
  Dataset d;
  d.samples = read_matrix_csv(path);
  d.centered = centered;
  return d;
}

CovarianceSet read_covariance_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  nlohmann::json j;
  in >> j;
  if (!j.contains("matrices") || !j.contains("weights"))
    throw std::runtime_error("manifest must contain 'matrices' and 'weights'");
  const auto base = path.parent_path();
  std::vector<Matrix> mats;
  for (const auto& rel : j["matrices"])
    mats.push_back(read_matrix_csv(base / rel.get<std::string>()));
  std::vector<double> weights = j["weights"].get<std::vector<double>>();
  std::optional<std::vector<int>> n_points;
  if (j.contains("n_points") && !j["n_points"].is_null())
    n_points = j["n_points"].get<std::vector<int>>();
  return CovarianceSet::create(std::move(mats), std::move(weights), std::move(n_points));
}

void write_covariance_manifest(const std::filesystem::path& path,
                               const std::vector<std::string>& matrix_files,
                               const std::vector<double>& weights,
                               const std::optional<std::vector<int>>& n_points) {
  nlohmann::json j;
  j["matrices"] = matrix_files;
  j["weights"] = weights;
  if (n_points) j["n_points"] = *n_points;
  write_text(path, j.dump(2) + "\n");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace cssl::io
