#pragma once

#include "twofold/common.hpp"

#include <span>
#include <vector>

namespace twofold {

struct RestoreConfig {
  double mu = 1.0;        // twofold regularization weight (>= 0)
  int max_iters = 200;    // CG iteration cap
  double tol_rel = 1e-8;  // stop when ||R||_F < tol_rel * ||mask o Y||_F

  void validate() const {
    if (mu < 0) throw ParameterError("RestoreConfig: mu must be >= 0");
    if (max_iters < 1) throw ParameterError("RestoreConfig: max_iters must be >= 1");
    if (tol_rel <= 0) throw ParameterError("RestoreConfig: tol must be > 0");
  }
};

/// H(X) = mask o X + mu * Ls X Lm, applied as two successive products.
/// Self-adjoint and PSD for PSD Laplacians and a binary mask.
Matrix apply_operator(const Matrix& x, const Matrix& mask, double mu, const Matrix& l_s,
                      const Matrix& l_m);

struct CgResult {
  Matrix x;
  std::vector<double> residual_norms;  // ||R||_F before each iteration, then final
  int iters = 0;
  bool converged = false;
  bool breakdown = false;  // operator singular along a search direction
};

/// Fixed-budget CG core shared by the iterative solver and the unrolled
/// network. With empty kappa/xi the coefficients are the classical CG values;
/// otherwise they are taken verbatim and the residual is recomputed from the
/// operator each step. eps_abs <= 0 disables the tolerance stop.
CgResult run_cg(const Matrix& y, const Matrix& mask, double mu, const Matrix& l_s,
                const Matrix& l_m, const Matrix& x0, int max_iters, double eps_abs,
                std::span<const double> kappa = {}, std::span<const double> xi = {});

/// Conjugate-gradient solve of (mask o + mu Ls . Lm) X = mask o Y.
/// X0 defaults to mask o Y. On breakdown the last finite iterate is returned
/// with the flag set so an outer alternating loop can continue.
CgResult cg_restore(const Matrix& y, const Matrix& mask, double mu, const Matrix& l_s,
                    const Matrix& l_m, const RestoreConfig& cfg, const Matrix* x0 = nullptr);

struct DenseOracleResult {
  Matrix x;
  bool singular = false;
  double condition_number = 0.0;
};

/// Test oracle: forms the NM x NM system mu(Lm (x) Ls) + diag(vec mask) and
/// solves it densely. Requires N*M <= 4096. Flags systems with condition
/// number above 1e12 as singular instead of solving them.
DenseOracleResult dense_oracle_restore(const Matrix& y, const Matrix& mask, double mu,
                                       const Matrix& l_s, const Matrix& l_m);

}  // namespace twofold
