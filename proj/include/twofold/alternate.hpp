#pragma once

#include "twofold/graph_learn.hpp"
#include "twofold/restore.hpp"

#include <vector>

namespace twofold {

struct AltConfig {
  double mu = 1.0;
  PdhgConfig spatial_cfg;
  PdhgConfig modality_cfg;
  SignConfig sign_cfg;
  RestoreConfig restore_cfg;
  int outer_iters = 10;
  double outer_tol = 1e-4;  // relative change in X
  int knn_k = 6;            // spatial initialization graph

  void validate() const {
    if (outer_iters < 1) throw ParameterError("AltConfig: outer_iters must be >= 1");
    if (outer_tol <= 0) throw ParameterError("AltConfig: outer_tol must be > 0");
    spatial_cfg.validate();
    modality_cfg.validate();
    restore_cfg.validate();
  }
};

/// Sensible defaults for an N x M problem: unit regularization weights,
/// sigma = 1 and tau from the stability rule for each graph size.
AltConfig default_alt_config(int n_nodes, int n_modalities);

struct CycleStats {
  double objective = 0.0;  // full MAP objective after the cycle
  double fidelity = 0.0;
  double twofold = 0.0;
  double reg_spatial = 0.0;
  double reg_modality = 0.0;
  double objective_before_signal = 0.0;  // fidelity + twofold before step (iii)
  double objective_after_signal = 0.0;   // fidelity + twofold after step (iii)
  double x_rel_change = 0.0;
  int cg_iters = 0;
  bool cg_breakdown = false;
  int pdhg_iters_spatial = 0;
  int pdhg_iters_modality = 0;
};

struct AltResult {
  MultimodalSignal x;
  Matrix l_s;
  Matrix l_m_signed;
  Matrix w_s;
  Matrix w_m;
  Matrix sign_c;
  std::vector<CycleStats> trace;
  int outer_iters_used = 0;
};

/// Plain alternating minimization: per outer cycle, (i) signed modality
/// graph, (ii) spatial graph, (iii) CG signal restoration. PDHG states are
/// warm-started across cycles; the first cycle starts from zeros.
AltResult alternate(const Matrix& y, const Matrix& mask, const AltConfig& cfg);

/// 6-NN initialization Laplacian built from the rows of mask o Y.
Matrix observation_knn_laplacian(const Matrix& y, const Matrix& mask, int k = 6);

/// Same construction over columns (used to freeze the modality graph in the
/// no-graph-learning ablation).
Matrix observation_knn_laplacian_cols(const Matrix& y, const Matrix& mask, int k = 6);

}  // namespace twofold
