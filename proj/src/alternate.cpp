#include "twofold/alternate.hpp"

#include "twofold/signal.hpp"

namespace twofold {

AltConfig default_alt_config(int n_nodes, int n_modalities) {
  AltConfig cfg;
  cfg.mu = 0.5;
  cfg.spatial_cfg.alpha_fit = 1.0;
  cfg.spatial_cfg.beta_frob = 1.0;
  cfg.spatial_cfg.gamma_log = 0.5;
  cfg.spatial_cfg.sigma = 1.0;
  cfg.spatial_cfg.tau = stable_tau(n_nodes, 1.0, 1.0);
  cfg.modality_cfg = cfg.spatial_cfg;
  cfg.modality_cfg.tau = stable_tau(n_modalities, 1.0, 1.0);
  return cfg;
}

Matrix observation_knn_laplacian(const Matrix& y, const Matrix& mask, int k) {
  const Matrix observed = mask.cwiseProduct(y);
  return laplacian_from_adjacency(knn_graph(observed, k)).matrix();
}

Matrix observation_knn_laplacian_cols(const Matrix& y, const Matrix& mask, int k) {
  const Matrix observed = (mask.cwiseProduct(y)).transpose();
  return laplacian_from_adjacency(knn_graph(observed, k)).matrix();
}

namespace {

double barrier_objective(const Matrix& w, const PdhgConfig& cfg) {
  const Vector d = w.rowwise().sum();
  double log_term = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) log_term += std::log(std::max(d(i), 1e-300));
  return cfg.beta_frob * (d.squaredNorm() + w.squaredNorm()) - cfg.gamma_log * log_term;
}

}  // namespace

AltResult alternate(const Matrix& y, const Matrix& mask, const AltConfig& cfg) {
  cfg.validate();
  require_same_shape(y, mask, "alternate");
  if (!y.allFinite()) throw ValidationError("alternate: observation matrix has non-finite entries");

  const int n = static_cast<int>(y.rows());
  const int m = static_cast<int>(y.cols());

  AltResult res;
  res.x = mask.cwiseProduct(y);
  res.l_s = observation_knn_laplacian(y, mask, cfg.knn_k);
  res.w_s = Matrix::Zero(n, n);
  Vector u_s = Vector::Zero(n);
  res.w_m = Matrix::Zero(m, m);
  Vector u_m = Vector::Zero(m);

  for (int outer = 0; outer < cfg.outer_iters; ++outer) {
    CycleStats stats;

    // (i) signed modality graph from the current signal and spatial graph
    SignedModalityResult modality =
        learn_signed_modality(res.x, res.l_s, cfg.modality_cfg, cfg.sign_cfg, &res.w_m, &u_m);
    res.l_m_signed = modality.laplacian.matrix();
    res.w_m = modality.w_m;
    res.sign_c = modality.sign.c;
    u_m = modality.dual;
    stats.pdhg_iters_modality = modality.iters;

    // (ii) spatial graph from the kernel filtered through the modality graph
    const Matrix k_s = spatial_kernel(res.x, res.l_m_signed);
    PdhgResult spatial = pdhg_learn(k_s, cfg.spatial_cfg, &res.w_s, &u_s);
    res.l_s = spatial.laplacian;
    res.w_s = spatial.w;
    u_s = spatial.dual;
    stats.pdhg_iters_spatial = spatial.iters;

    // (iii) signal restoration, warm-started from the current iterate
    stats.objective_before_signal =
        0.5 * (mask.cwiseProduct(y - res.x)).squaredNorm() +
        0.5 * cfg.mu * twofold_smoothness(res.x, res.l_s, res.l_m_signed);
    CgResult cg = cg_restore(y, mask, cfg.mu, res.l_s, res.l_m_signed, cfg.restore_cfg, &res.x);
    stats.cg_iters = cg.iters;
    stats.cg_breakdown = cg.breakdown;

    const double x_norm = res.x.norm();
    stats.x_rel_change = (cg.x - res.x).norm() / std::max(x_norm, 1e-12);
    res.x = std::move(cg.x);

    stats.fidelity = 0.5 * (mask.cwiseProduct(y - res.x)).squaredNorm();
    stats.twofold = 0.5 * cfg.mu * twofold_smoothness(res.x, res.l_s, res.l_m_signed);
    stats.objective_after_signal = stats.fidelity + stats.twofold;
    stats.reg_spatial = barrier_objective(res.w_s, cfg.spatial_cfg);
    stats.reg_modality = barrier_objective(res.w_m, cfg.modality_cfg);
    stats.objective = stats.fidelity + stats.twofold + stats.reg_spatial + stats.reg_modality;
    res.trace.push_back(stats);
    res.outer_iters_used = outer + 1;

    if (stats.x_rel_change < cfg.outer_tol) break;
  }
  return res;
}

}  // namespace twofold
