#include "twofold/restore.hpp"

#include <limits>

namespace twofold {

Matrix apply_operator(const Matrix& x, const Matrix& mask, double mu, const Matrix& l_s,
                      const Matrix& l_m) {
  require_same_shape(x, mask, "apply_operator");
  if (l_s.rows() != x.rows() || l_m.rows() != x.cols()) {
    throw ValidationError("apply_operator: Laplacian sizes do not match the signal");
  }
  if (mu == 0.0) return mask.cwiseProduct(x);
  return mask.cwiseProduct(x) + mu * (l_s * x * l_m);
}

CgResult run_cg(const Matrix& y, const Matrix& mask, double mu, const Matrix& l_s,
                const Matrix& l_m, const Matrix& x0, int max_iters, double eps_abs,
                std::span<const double> kappa, std::span<const double> xi) {
  const bool learned = !kappa.empty();
  if (learned && (static_cast<int>(kappa.size()) < max_iters ||
                  static_cast<int>(xi.size()) < max_iters)) {
    throw ParameterError("run_cg: learned coefficient arrays shorter than the iteration count");
  }

  const Matrix rhs = mask.cwiseProduct(y);
  CgResult res;
  res.x = x0;
  Matrix r = rhs - apply_operator(res.x, mask, mu, l_s, l_m);
  Matrix p = r;
  double r_norm2 = r.squaredNorm();
  res.residual_norms.push_back(std::sqrt(r_norm2));

  for (int k = 0; k < max_iters; ++k) {
    if (eps_abs > 0.0 && std::sqrt(r_norm2) < eps_abs) {
      res.converged = true;
      break;
    }
    double conj;
    if (learned) {
      res.x += kappa[static_cast<size_t>(k)] * p;
      // the residual is always the true residual of the optimality condition
      r = rhs - apply_operator(res.x, mask, mu, l_s, l_m);
      r_norm2 = r.squaredNorm();
      conj = xi[static_cast<size_t>(k)];
    } else {
      const Matrix s = apply_operator(p, mask, mu, l_s, l_m);
      const double curvature = p.cwiseProduct(s).sum();
      if (curvature <= 1e-14 * p.squaredNorm()) {
        // singular along the search direction: keep the last finite iterate
        res.breakdown = true;
        break;
      }
      const double step = r_norm2 / curvature;
      res.x += step * p;
      r -= step * s;
      const double r_next2 = r.squaredNorm();
      conj = r_next2 / r_norm2;
      r_norm2 = r_next2;
    }
    if (!res.x.allFinite()) {
      throw NumericalError("run_cg: non-finite iterate at iteration " + std::to_string(k));
    }
    p = r + conj * p;
    res.iters = k + 1;
    res.residual_norms.push_back(std::sqrt(r_norm2));
  }
  if (eps_abs > 0.0 && !res.breakdown && std::sqrt(r_norm2) < eps_abs) res.converged = true;
  return res;
}

CgResult cg_restore(const Matrix& y, const Matrix& mask, double mu, const Matrix& l_s,
                    const Matrix& l_m, const RestoreConfig& cfg, const Matrix* x0) {
  cfg.validate();
  const Matrix masked_y = mask.cwiseProduct(y);
  const double eps = cfg.tol_rel * masked_y.norm();
  const Matrix start = x0 ? *x0 : masked_y;
  return run_cg(y, mask, mu, l_s, l_m, start, cfg.max_iters, eps);
}

DenseOracleResult dense_oracle_restore(const Matrix& y, const Matrix& mask, double mu,
                                       const Matrix& l_s, const Matrix& l_m) {
  require_same_shape(y, mask, "dense_oracle_restore");
  const Eigen::Index n = y.rows(), m = y.cols();
  if (n * m > 4096) throw ParameterError("dense_oracle_restore: N*M exceeds 4096");

  // column-major vec: vec(Ls X Lm) = (Lm (x) Ls) vec(X) for symmetric Lm
  Matrix a = Matrix::Zero(n * m, n * m);
  for (Eigen::Index bj = 0; bj < m; ++bj)
    for (Eigen::Index bi = 0; bi < m; ++bi) a.block(bi * n, bj * n, n, n) = mu * l_m(bi, bj) * l_s;
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i) a(j * n + i, j * n + i) += mask(i, j);

  DenseOracleResult res;
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  res.condition_number = lmin <= 0.0 ? std::numeric_limits<double>::infinity() : lmax / lmin;
  if (res.condition_number > 1e12) {
    res.singular = true;
    res.x = Matrix::Zero(n, m);
    return res;
  }

  const Matrix rhs_mat = mask.cwiseProduct(y);
  const Vector rhs = Eigen::Map<const Vector>(rhs_mat.data(), n * m);
  const Vector sol = a.ldlt().solve(rhs);
  res.x = Eigen::Map<const Matrix>(sol.data(), n, m);
  return res;
}

}  // namespace twofold
