// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "cssl/io.hpp"
#include "cssl/rng.hpp"
#include "cssl/types.hpp"

using namespace cssl;

namespace {

Matrix random_pd(int d, Rng& rng, double ridge = 0.5) {
  Matrix a(d, d);
  for (int i = 0; i < d * d; ++i) a.data()[i] = rng.normal();
  Matrix s = a * a.transpose() / d + ridge * Matrix::Identity(d, d);
  return 0.5 * (s + s.transpose());
}

}  // namespace

TEST_CASE("sample_covariance matches the 1/n outer-product form") {
  Dataset ds;
  ds.samples = Matrix(1, 2);
  ds.samples << 1.0, 2.0;
  ds.centered = true;
  const Matrix s = sample_covariance(ds, 0.0);
  CHECK(s(0, 0) == doctest::Approx(1.0));
  CHECK(s(0, 1) == doctest::Approx(2.0));
  CHECK(s(1, 0) == doctest::Approx(2.0));
  CHECK(s(1, 1) == doctest::Approx(4.0));
}

TEST_CASE("diagonal loading raises exactly the diagonal") {
  Rng rng(1);
  Dataset ds;
  ds.samples = Matrix(20, 4);
  for (int i = 0; i < ds.samples.size(); ++i) ds.samples.data()[i] = rng.normal();
  ds = ds.centered_copy();
  const Matrix plain = sample_covariance(ds, 0.0);
  const Matrix loaded = sample_covariance(ds, 1e-3);
  CHECK((loaded - plain).diagonal().cwiseAbs().maxCoeff() ==
        doctest::Approx(1e-3).epsilon(1e-12));
  Matrix off = loaded - plain;
  off.diagonal().setZero();
  CHECK(off.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("orthogonal equal-norm columns give a diagonal covariance") {
  Dataset ds;
  ds.samples = Matrix(2, 2);
  ds.samples << 1.0, 1.0, 1.0, -1.0;  // columns orthogonal, equal norm
  ds.centered = true;
  const Matrix s = sample_covariance(ds, 0.0);
  CHECK(s(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("non-centered datasets are rejected") {
  Dataset ds;
  ds.samples = Matrix::Ones(3, 2);
  ds.centered = false;
  CHECK_THROWS_AS(sample_covariance(ds, 0.0), std::invalid_argument);
  const Dataset centered = ds.centered_copy();
  CHECK(centered.samples.colwise().mean().cwiseAbs().maxCoeff() <= 1e-10);
  CHECK_NOTHROW(sample_covariance(centered, 0.0));
}

TEST_CASE("sample covariance is PSD, and PD under positive loading") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 6));
    const int d = 2 + static_cast<int>(rng.uniform_int(0, 4));
    Dataset ds;
    ds.samples = Matrix(n, d);
    for (int i = 0; i < n * d; ++i) ds.samples.data()[i] = rng.normal();
    ds.centered = true;  // zero-mean model draw
    Eigen::SelfAdjointEigenSolver<Matrix> es(sample_covariance(ds, 0.0));
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> es2(sample_covariance(ds, 1e-6));
    CHECK(es2.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("log_likelihood closed cases and eigenvalue oracle") {
  const int d = 3;
  CHECK(log_likelihood(Matrix::Identity(d, d), Matrix::Identity(d, d)) ==
        doctest::Approx(-3.0));
  CHECK(log_likelihood(2.0 * Matrix::Identity(2, 2), Matrix::Identity(2, 2)) ==
        doctest::Approx(2.0 * std::log(2.0) - 4.0));
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix lam = random_pd(4, rng);
    const Matrix s = random_pd(4, rng);
    Eigen::SelfAdjointEigenSolver<Matrix> es(lam);
    const double slow = es.eigenvalues().array().log().sum() - (s * lam).trace();
    CHECK(log_likelihood(lam, s) == doctest::Approx(slow).epsilon(1e-10));
  }
  Matrix indef = Matrix::Identity(2, 2);
  indef(1, 1) = -1.0;
  CHECK_THROWS_AS(log_likelihood(indef, Matrix::Identity(2, 2)), std::domain_error);
}

TEST_CASE("mle_precision inverts and maximizes the likelihood") {
  CHECK((mle_precision(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
  Matrix diag = Matrix::Zero(2, 2);
  diag(0, 0) = 2.0;
  diag(1, 1) = 4.0;
  const Matrix inv = mle_precision(diag);
  CHECK(inv(0, 0) == doctest::Approx(0.5));
  CHECK(inv(1, 1) == doctest::Approx(0.25));

  Rng rng(5);
  const Matrix s = random_pd(4, rng);
  const Matrix lam_hat = mle_precision(s);
  CHECK((s * lam_hat - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-8);
  const double best = log_likelihood(lam_hat, s);
  for (int k = 0; k < 100; ++k) {
    Matrix noise(4, 4);
    for (int i = 0; i < 16; ++i) noise.data()[i] = 0.05 * rng.normal();
    symmetrize_in_place(noise);
    Eigen::SelfAdjointEigenSolver<Matrix> es(lam_hat + noise);
    if (es.eigenvalues().minCoeff() <= 0.0) continue;
    CHECK(log_likelihood(lam_hat + noise, s) <= best + 1e-12);
  }
  CHECK_THROWS_WITH_AS(mle_precision(Matrix::Zero(2, 2)),
                       doctest::Contains("diag_load"), std::domain_error);
}

TEST_CASE("covariance set validation") {
  Matrix ident = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(CovarianceSet::create({ident}, {0.5}), std::invalid_argument);
  CHECK_THROWS_AS(CovarianceSet::create({ident}, {-1.0}), std::invalid_argument);
  Matrix skew = ident;
  skew(0, 1) = 1e-6;
  CHECK_THROWS_AS(CovarianceSet::create({skew}, {1.0}), std::invalid_argument);
  CHECK_NOTHROW(CovarianceSet::create({ident, 2.0 * ident}, {0.25, 0.75}));
}

TEST_CASE("hyperparams conjugate order") {
  CHECK(Hyperparams::create(0.1, 1.0, 1.0).q() == kInf);
  CHECK(Hyperparams::create(0.1, 1.0, 2.0).q() == 2.0);
  CHECK(Hyperparams::create(0.1, 1.0, kInf).q() == 1.0);
  CHECK_THROWS_AS(Hyperparams::create(-0.1, 1.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(Hyperparams::create(0.1, 0.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(Hyperparams::create(0.1, 1.0, 3.0), std::invalid_argument);
}

TEST_CASE("matrix csv round trip keeps every bit") {
  Rng rng(9);
  Matrix m(3, 4);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * 1e3;
  const auto path = std::filesystem::temp_directory_path() / "cssl_io_test.csv";
  io::write_matrix_csv(path, m);
  const Matrix back = io::read_matrix_csv(path);
  CHECK(back.rows() == m.rows());
  CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove(path);
}
