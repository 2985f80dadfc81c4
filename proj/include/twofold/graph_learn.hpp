#pragma once

#include "twofold/common.hpp"
#include "twofold/graph.hpp"

#include <span>

namespace twofold {

// Canonical names for the three regularization roles of the graph-learning
// objective  alpha_fit * tr(L K) + beta_frob * ||L||_F^2 - gamma_log * 1^T log(diag L).
struct PdhgStepParams {
  double alpha_fit = 1.0;   // kernel fitting weight
  double beta_frob = 1.0;   // Frobenius penalty on degrees and weights
  double gamma_log = 0.5;   // log barrier keeping degrees positive
  double tau = 0.1;         // primal step size
  double sigma = 1.0;       // dual step size
};

struct PdhgConfig {
  double alpha_fit = 1.0;
  double beta_frob = 1.0;
  double gamma_log = 0.5;
  double tau = 0.1;
  double sigma = 1.0;
  int max_iters = 200;
  double tol = 1e-6;  // relative change in W

  PdhgStepParams step() const { return {alpha_fit, beta_frob, gamma_log, tau, sigma}; }
  void validate() const;
};

/// Primal step size satisfying 1/tau >= sigma*||S||^2 + beta_frob for the
/// degree operator S(W) = W1 on n-node graphs (||S||^2 <= 2n).
double stable_tau(int n, double sigma, double beta_frob);

struct SignConfig {
  int rank = 2;     // dominant subspace dimension r
  int iters = 30;   // subspace iteration count
  bool enabled = true;  // false forces C = all-ones (unsigned mode)
};

/// Continuous surrogate for the modality polarity matrix: cosine similarities
/// of the row-normalized dominant eigenspace of the coupling kernel.
struct SignSurrogate {
  Matrix c;  // symmetric, C_ii = 1, entries in [-1, 1]
  int rank = 0;
  int iters = 0;
};

/// Subspace iteration on K from a deterministic seed basis (the first r
/// identity columns pushed once through K and orthonormalized).
SignSurrogate sign_surrogate(const Matrix& k, int rank, int iters);

/// K_mag = C o K. Together with Proposition-style trace equivalence this
/// reduces signed learning to unsigned learning on the modulated kernel.
Matrix modulate_kernel(const Matrix& k, const Matrix& c);

/// Unique positive minimizer of
///   beta d^2 + alpha k_ii d - gamma log d + (1/(2 sigma)) (d - v)^2,
/// i.e. the positive root of (2 beta + 1/sigma) d^2 + (alpha k_ii - v/sigma) d - gamma = 0.
double degree_prox(double v, double k_diag, double alpha_fit, double beta_frob, double gamma_log,
                   double sigma);

struct PdhgResult {
  Matrix w;          // learned adjacency (valid member of the constraint set)
  Matrix laplacian;  // diag(W1) - W
  Vector degrees;    // final dual-step degrees d
  Vector dual;       // final dual variable u
  int iters = 0;
  bool converged = false;
  double rel_change = 0.0;
};

/// PDHG core with per-iteration parameters: primal projected gradient step,
/// extrapolation, and the closed-form degree prox in the dual. Runs
/// steps.size() iterations or stops early when the relative change in W
/// drops below tol (tol <= 0 disables the stop).
PdhgResult pdhg_run(const Matrix& k, const Matrix& w0, const Vector& u0,
                    std::span<const PdhgStepParams> steps, double tol);

/// Fixed-parameter graph learning (Algorithm-style loop until tolerance).
/// W0 and u0 default to zeros.
PdhgResult pdhg_learn(const Matrix& k, const PdhgConfig& cfg, const Matrix* w0 = nullptr,
                      const Vector* u0 = nullptr);

/// Primal objective of the reparametrized problem at d = W1; used by tests
/// and the alternating solver's trace.
double graph_learning_objective(const Matrix& w, const Matrix& k, double alpha_fit,
                                double beta_frob, double gamma_log);

struct SignedModalityResult {
  SignedLaplacian laplacian;  // diag(W_m 1) - C o W_m
  Matrix w_m;                 // nonnegative magnitudes
  SignSurrogate sign;
  Vector dual;
  int iters = 0;
};

/// Learns the signed modality graph for signal X under spatial Laplacian Ls:
/// kernel -> sign surrogate -> modulated kernel -> PDHG magnitudes.
SignedModalityResult learn_signed_modality(const Matrix& x, const Matrix& l_s,
                                           const PdhgConfig& cfg, const SignConfig& sign_cfg,
                                           const Matrix* w0 = nullptr, const Vector* u0 = nullptr);

}  // namespace twofold
