#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "test_helpers.hpp"
#include "twofold/restore.hpp"

using namespace twofold;
using namespace twofold::test;

namespace {

Matrix random_mask(int n, int m, double missing_rate, Rng& rng) {
  Matrix mask = Matrix::Ones(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      if (rng.uniform() < missing_rate) mask(i, j) = 0.0;
  return mask;
}

double restore_objective(const Matrix& x, const Matrix& y, const Matrix& mask, double mu,
                         const Matrix& l_s, const Matrix& l_m) {
  const double fidelity = 0.5 * mask.cwiseProduct(y - x).squaredNorm();
  const Matrix k = x.transpose() * (l_s * x);
  return fidelity + 0.5 * mu * l_m.cwiseProduct(k).sum();
}

}  // namespace

TEST_CASE("operator basics") {
  Rng rng(1);
  const Matrix x = random_matrix(4, 3, rng);
  const Matrix mask = random_mask(4, 3, 0.4, rng);
  const Matrix l_s = random_connected_laplacian(4, rng);
  const Matrix l_m = random_connected_laplacian(3, rng);

  CHECK(apply_operator(x, mask, 0.0, l_s, l_m) == mask.cwiseProduct(x));

  const Matrix ones = Matrix::Ones(4, 3);
  const Matrix h = apply_operator(x, ones, 0.7, Matrix::Identity(4, 4), Matrix::Identity(3, 3));
  CHECK((h - 1.7 * x).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("operator is self-adjoint") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = random_matrix(5, 4, rng);
    const Matrix z = random_matrix(5, 4, rng);
    const Matrix mask = random_mask(5, 4, 0.3, rng);
    const Matrix l_s = random_connected_laplacian(5, rng);
    const Matrix l_m = random_connected_laplacian(4, rng);
    const double lhs = apply_operator(x, mask, 0.9, l_s, l_m).cwiseProduct(z).sum();
    const double rhs = x.cwiseProduct(apply_operator(z, mask, 0.9, l_s, l_m)).sum();
    CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(lhs)));
  }
}

TEST_CASE("dense oracle basics") {
  Rng rng(3);
  const Matrix y = random_matrix(4, 3, rng);
  const Matrix ones = Matrix::Ones(4, 3);
  const Matrix l_s = random_connected_laplacian(4, rng);
  const Matrix l_m = random_connected_laplacian(3, rng);

  const DenseOracleResult id = dense_oracle_restore(y, ones, 0.0, l_s, l_m);
  CHECK_FALSE(id.singular);
  CHECK((id.x - y).cwiseAbs().maxCoeff() <= 1e-12);

  const Matrix mask = random_mask(4, 3, 0.3, rng);
  const DenseOracleResult sol = dense_oracle_restore(y, mask, 0.5, l_s, l_m);
  REQUIRE_FALSE(sol.singular);
  const Matrix residual = apply_operator(sol.x, mask, 0.5, l_s, l_m) - mask.cwiseProduct(y);
  CHECK(residual.norm() <= 1e-8 * y.norm());
}

TEST_CASE("cg agrees with the dense oracle") {
  Rng rng(4);
  RestoreConfig cfg;
  cfg.mu = 0.5;
  cfg.max_iters = 500;
  cfg.tol_rel = 1e-12;
  int checked = 0;
  for (int trial = 0; trial < 60 && checked < 25; ++trial) {
    const Matrix y = random_matrix(6, 5, rng);
    const Matrix mask = random_mask(6, 5, 0.3, rng);
    const Matrix l_s = random_connected_laplacian(6, rng);
    const Matrix l_m = random_connected_laplacian(5, rng);
    const DenseOracleResult oracle = dense_oracle_restore(y, mask, cfg.mu, l_s, l_m);
    if (oracle.singular) continue;
    const CgResult cg = cg_restore(y, mask, cfg.mu, l_s, l_m, cfg);
    CHECK((cg.x - oracle.x).norm() <= 1e-8 * std::max(1.0, oracle.x.norm()));
    ++checked;
  }
  CHECK(checked >= 25);
}

TEST_CASE("cg trivial cases") {
  Rng rng(5);
  const Matrix y = random_matrix(4, 3, rng);
  const Matrix ones = Matrix::Ones(4, 3);
  const Matrix l_s = random_connected_laplacian(4, rng);
  const Matrix l_m = random_connected_laplacian(3, rng);
  RestoreConfig cfg;

  // identity operator solved in one iteration from a cold start
  const Matrix x0 = Matrix::Zero(4, 3);
  const CgResult one = run_cg(y, ones, 0.0, l_s, l_m, x0, 50, 1e-10 * y.norm());
  CHECK(one.iters == 1);
  CHECK((one.x - y).cwiseAbs().maxCoeff() <= 1e-12);

  // zero data, zero start: nothing to do
  cfg.mu = 0.5;
  const CgResult zero = cg_restore(Matrix::Zero(4, 3), ones, cfg.mu, l_s, l_m, cfg, &x0);
  CHECK(zero.iters == 0);
  CHECK(zero.x.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fixed point: an exact solution is returned unchanged") {
  Rng rng(6);
  const Matrix y = random_matrix(5, 4, rng);
  const Matrix mask = random_mask(5, 4, 0.25, rng);
  const Matrix l_s = random_connected_laplacian(5, rng);
  const Matrix l_m = random_connected_laplacian(4, rng);
  RestoreConfig cfg;
  cfg.mu = 0.4;
  const DenseOracleResult oracle = dense_oracle_restore(y, mask, cfg.mu, l_s, l_m);
  REQUIRE_FALSE(oracle.singular);
  const CgResult cg = cg_restore(y, mask, cfg.mu, l_s, l_m, cfg, &oracle.x);
  CHECK(cg.iters == 0);
  CHECK(cg.converged);
  CHECK(cg.x == oracle.x);
}

TEST_CASE("objective is non-increasing across iterations") {
  Rng rng(7);
  const Matrix y = random_matrix(6, 5, rng);
  const Matrix mask = random_mask(6, 5, 0.3, rng);
  const Matrix l_s = random_connected_laplacian(6, rng);
  const Matrix l_m = random_connected_laplacian(5, rng);
  const double mu = 0.8;

  // replay CG step by step via increasing fixed iteration budgets
  const Matrix x0 = mask.cwiseProduct(y);
  double previous = restore_objective(x0, y, mask, mu, l_s, l_m);
  for (int iters = 1; iters <= 25; ++iters) {
    const CgResult cg = run_cg(y, mask, mu, l_s, l_m, x0, iters, -1.0);
    const double value = restore_objective(cg.x, y, mask, mu, l_s, l_m);
    CHECK(value <= previous + 1e-10);
    previous = value;
  }
}

TEST_CASE("tightly solved restoration is linear in the data") {
  Rng rng(8);
  RestoreConfig cfg;
  cfg.mu = 0.5;
  cfg.max_iters = 1000;
  cfg.tol_rel = 1e-13;
  const Matrix mask = random_mask(6, 5, 0.2, rng);
  const Matrix l_s = random_connected_laplacian(6, rng);
  const Matrix l_m = random_connected_laplacian(5, rng);
  const Matrix y1 = random_matrix(6, 5, rng);
  const Matrix y2 = random_matrix(6, 5, rng);
  const double a = 1.3, b = -0.7;

  const Matrix lhs = cg_restore(a * y1 + b * y2, mask, cfg.mu, l_s, l_m, cfg).x;
  const Matrix rhs = a * cg_restore(y1, mask, cfg.mu, l_s, l_m, cfg).x +
                     b * cg_restore(y2, mask, cfg.mu, l_s, l_m, cfg).x;
  CHECK((lhs - rhs).norm() <= 1e-6 * std::max(1.0, rhs.norm()));
}

TEST_CASE("breakdown is flagged, not fatal") {
  // all-missing mask with mu = 0: the operator is identically zero
  const Matrix y = Matrix::Ones(3, 3);
  const Matrix mask = Matrix::Zero(3, 3);
  const Matrix x0 = Matrix::Ones(3, 3);
  const CgResult res = run_cg(y, mask, 0.0, Matrix::Zero(3, 3), Matrix::Zero(3, 3), x0, 10, -1.0);
  CHECK(res.breakdown);
  CHECK(res.x == x0);  // last finite iterate preserved
}
