#include "twofold/graph_learn.hpp"

#include "twofold/signal.hpp"

#include <limits>
#include <vector>

namespace twofold {

void PdhgConfig::validate() const {
  if (alpha_fit < 0 || beta_frob < 0) {
    throw ParameterError("PdhgConfig: alpha_fit and beta_frob must be >= 0");
  }
  if (gamma_log <= 0) throw ParameterError("PdhgConfig: gamma_log must be > 0");
  if (tau <= 0 || sigma <= 0) throw ParameterError("PdhgConfig: step sizes must be > 0");
  if (max_iters < 1) throw ParameterError("PdhgConfig: max_iters must be >= 1");
}

double stable_tau(int n, double sigma, double beta_frob) {
  return 1.0 / (sigma * 2.0 * n + beta_frob + 1.0);
}

SignSurrogate sign_surrogate(const Matrix& k, int rank, int iters) {
  const int m = static_cast<int>(k.rows());
  if (k.rows() != k.cols()) throw ValidationError("sign_surrogate: kernel must be square");
  if (!is_symmetric(k, 1e-8 * std::max(1.0, k.cwiseAbs().maxCoeff()))) {
    throw ValidationError("sign_surrogate: kernel asymmetric beyond tolerance");
  }
  if (rank < 1 || rank > m) {
    throw ParameterError("sign_surrogate: rank must be in [1, M], got " + std::to_string(rank));
  }

  auto orthonormalize = [m, rank](const Matrix& b) -> Matrix {
    Eigen::HouseholderQR<Matrix> qr(b);
    return qr.householderQ() * Matrix::Identity(m, rank);
  };

  // deterministic seed basis: K applied to the first r identity columns
  Matrix q = orthonormalize(k.leftCols(rank));
  for (int it = 0; it < iters; ++it) q = orthonormalize(k * q);

  Matrix p = q;
  for (int i = 0; i < m; ++i) {
    const double norm = p.row(i).norm();
    if (norm < 1e-12) {
      p.row(i).setZero();
      p(i, 0) = 1.0;
    } else {
      p.row(i) /= norm;
    }
  }

  SignSurrogate s;
  s.c = (p * p.transpose()).cwiseMax(-1.0).cwiseMin(1.0);
  s.c.diagonal().setOnes();  // self-cosine is 1 by definition
  s.rank = rank;
  s.iters = iters;
  return s;
}

Matrix modulate_kernel(const Matrix& k, const Matrix& c) {
  require_same_shape(k, c, "modulate_kernel");
  return c.cwiseProduct(k);
}

double degree_prox(double v, double k_diag, double alpha_fit, double beta_frob, double gamma_log,
                   double sigma) {
  const double a = 2.0 * beta_frob + 1.0 / sigma;
  const double b = alpha_fit * k_diag - v / sigma;
  const double disc = std::sqrt(b * b + 4.0 * a * gamma_log);
  // the two forms are algebraically equal; pick the cancellation-free one
  return b > 0.0 ? 2.0 * gamma_log / (b + disc) : (disc - b) / (2.0 * a);
}

PdhgResult pdhg_run(const Matrix& k, const Matrix& w0, const Vector& u0,
                    std::span<const PdhgStepParams> steps, double tol) {
  const int n = static_cast<int>(k.rows());
  require_same_shape(k, w0, "pdhg_run");
  if (u0.size() != n) throw ValidationError("pdhg_run: dual start has wrong length");

  PdhgResult res;
  res.w = w0;
  res.dual = u0;
  res.degrees = Vector::Zero(n);

  for (size_t t = 0; t < steps.size(); ++t) {
    const PdhgStepParams& p = steps[t];

    // primal descent with projection onto the adjacency set
    const Matrix grad = 2.0 * p.beta_frob * res.w - p.alpha_fit * k +
                        res.dual.replicate(1, n) + res.dual.transpose().replicate(n, 1);
    const Matrix w_next = project_adjacency(res.w - p.tau * grad).matrix();
    if (!w_next.allFinite()) {
      throw NumericalError("pdhg_run: non-finite primal iterate at iteration " +
                           std::to_string(t));
    }

    // extrapolation
    const Matrix w_bar = 2.0 * w_next - res.w;
    const Vector d_bar = w_bar.rowwise().sum();

    // dual ascent via the elementwise degree prox
    const Vector v = res.dual / p.sigma + d_bar;
    for (int i = 0; i < n; ++i) {
      res.degrees(i) = degree_prox(v(i), k(i, i), p.alpha_fit, p.beta_frob, p.gamma_log, p.sigma);
    }
    res.dual = p.sigma * (v - res.degrees);
    if (!res.dual.allFinite()) {
      throw NumericalError("pdhg_run: non-finite dual iterate at iteration " + std::to_string(t));
    }

    res.rel_change = (w_next - res.w).norm() / std::max(res.w.norm(), 1e-12);
    res.w = w_next;
    res.iters = static_cast<int>(t) + 1;
    // the first iteration is exempt: from a cold start the primal can be a
    // no-op while the dual still moves
    if (tol > 0.0 && t > 0 && res.rel_change < tol) {
      res.converged = true;
      break;
    }
  }

  res.laplacian = -res.w;
  res.laplacian.diagonal() = res.w.rowwise().sum();
  return res;
}

PdhgResult pdhg_learn(const Matrix& k, const PdhgConfig& cfg, const Matrix* w0, const Vector* u0) {
  cfg.validate();
  const int n = static_cast<int>(k.rows());
  if (k.rows() != k.cols()) throw ValidationError("pdhg_learn: kernel must be square");
  const Matrix start_w = w0 ? *w0 : Matrix::Zero(n, n);
  const Vector start_u = u0 ? *u0 : Vector::Zero(n);
  const std::vector<PdhgStepParams> steps(static_cast<size_t>(cfg.max_iters), cfg.step());
  return pdhg_run(k, start_w, start_u, steps, cfg.tol);
}

double graph_learning_objective(const Matrix& w, const Matrix& k, double alpha_fit,
                                double beta_frob, double gamma_log) {
  const Vector d = w.rowwise().sum();
  double log_term = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) <= 0.0) return std::numeric_limits<double>::infinity();
    log_term += std::log(d(i));
  }
  const double fit = d.dot(k.diagonal()) - w.cwiseProduct(k).sum();
  return alpha_fit * fit + beta_frob * (d.squaredNorm() + w.squaredNorm()) - gamma_log * log_term;
}

SignedModalityResult learn_signed_modality(const Matrix& x, const Matrix& l_s,
                                           const PdhgConfig& cfg, const SignConfig& sign_cfg,
                                           const Matrix* w0, const Vector* u0) {
  const Matrix k = modality_kernel(x, l_s);
  const int m = static_cast<int>(k.rows());
  SignSurrogate sign;
  if (sign_cfg.enabled) {
    sign = sign_surrogate(k, sign_cfg.rank, sign_cfg.iters);
  } else {
    sign.c = Matrix::Ones(m, m);
    sign.rank = 0;
    sign.iters = 0;
  }
  const Matrix k_mag = modulate_kernel(k, sign.c);
  PdhgResult learned = pdhg_learn(k_mag, cfg, w0, u0);

  SignedModalityResult res{SignedLaplacian::from_magnitude_and_sign(learned.w, sign.c),
                           std::move(learned.w), std::move(sign), std::move(learned.dual),
                           learned.iters};
  return res;
}

}  // namespace twofold
