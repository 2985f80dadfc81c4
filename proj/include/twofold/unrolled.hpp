#pragma once

#include "twofold/alternate.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace twofold {

enum class Variant { full, fixed_modality, without_gl };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

/// Raw (unconstrained) graph-learning parameters for one inner PDHG step.
/// Effective values are softplus(raw), so they stay strictly positive.
struct GlStepRaw {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double tau = 0.0;
  double sigma = 0.0;
};

struct LayerParams {
  std::vector<GlStepRaw> gl_spatial;   // size T; empty for without_gl
  std::vector<GlStepRaw> gl_modality;  // size T; full variant only
  std::vector<double> kappa_raw;       // size K
  std::vector<double> xi_raw;          // size K
  double mu_raw = 0.0;
};

double softplus(double raw);
double inv_softplus(double value);

/// L outer layers of trainable scalars; T PDHG and K CG inner iterations are
/// fixed. The subspace-iteration count of the sign surrogate is a model
/// constant (30); its rank r is stored.
struct UnrolledModel {
  Variant variant = Variant::full;
  int num_layers = 3;   // L
  int pdhg_steps = 5;   // T
  int cg_steps = 5;     // K
  int sign_rank = 2;    // r
  int knn_k = 6;
  std::vector<LayerParams> layers;

  // full: L(10T+2K+1); fixed-modality: L(5T+2K+1); without-gl: L(2K+1)
  int param_count() const;
  int params_per_layer() const;

  /// Flat raw-parameter vector; layout per layer:
  /// gl_spatial (t-major, alpha/beta/gamma/tau/sigma), gl_modality, kappa[K], xi[K], mu.
  std::vector<double> pack() const;
  void unpack(std::span<const double> raw);
};

static constexpr int kSignSurrogateIters = 30;

struct Sample {
  Matrix y;
  Matrix x_gt;
  Matrix mask;
};

/// learned: kappa/xi/mu come from the model. computed: the CG coefficients
/// are the classical values of the solver, which makes the forward pass equal
/// to the frozen alternating iteration.
enum class CoeffMode { learned, computed };

/// Per-sample quantities that do not depend on the trainable parameters.
struct ForwardContext {
  Matrix y;
  Matrix mask;
  Matrix l_s0;       // kNN spatial initialization
  Matrix l_m_fixed;  // fixed modality Laplacian for the ablation variants
};

/// Full solver state entering a layer.
struct LayerEntryState {
  Matrix x;
  Matrix l_s;
  Matrix w_s;
  Vector u_s;
  Matrix w_m;
  Vector u_m;
};

struct LayerOutputs {
  Matrix w_s;
  Matrix w_m;
  Matrix sign_c;
  Matrix l_s;
  Matrix l_m;
};

struct ForwardResult {
  Matrix x;
  Matrix l_s;
  Matrix l_m;
  std::vector<LayerEntryState> states;  // size L+1; states[l] enters layer l
  std::vector<LayerOutputs> per_layer;  // size L
};

ForwardContext make_forward_context(const UnrolledModel& model, const Matrix& y,
                                    const Matrix& mask);

ForwardResult forward(const UnrolledModel& model, const Matrix& y, const Matrix& mask,
                      CoeffMode mode = CoeffMode::learned);

/// Replays layers [layer_start, L) from a cached entry state; used by the
/// finite-difference gradient to avoid recomputing unaffected layers.
Matrix forward_from(const UnrolledModel& model, const ForwardContext& ctx, int layer_start,
                    LayerEntryState state, CoeffMode mode = CoeffMode::learned);

/// (1/(NM)) ||(1-mask) o (X - X_gt)||_F^2
double loss_masked(const Matrix& x, const Matrix& x_gt, const Matrix& mask);

struct GradientResult {
  std::vector<double> grad;  // d(mean loss)/d(raw parameter)
  double mean_loss = 0.0;
};

/// Central finite differences on the raw parameters (2 partial forward passes
/// per parameter and sample). Deterministic; parameters may be evaluated in
/// parallel since each owns its output slot.
GradientResult gradient(const UnrolledModel& model, std::span<const Sample> batch,
                        double fd_step = 1e-4, int threads = 1);

struct TrainOptions {
  int epochs = 50;
  double lr = 0.01;
  std::uint64_t seed = 0;
  double fd_step = 1e-4;
  int threads = 1;
  double divergence_threshold = 1e6;
};

struct TrainResult {
  UnrolledModel model;
  std::vector<double> loss_curve;  // mean training loss at the start of each epoch
};

/// Full-batch Adam (beta1 0.9, beta2 0.999, eps 1e-8) on the raw parameters.
TrainResult train(UnrolledModel model, std::span<const Sample> batch, const TrainOptions& opts);

/// Raw parameters chosen so the effective values reproduce the iterative
/// solver's configuration; kappa starts at 1 and xi at ~0 (1e-4), i.e. plain
/// gradient steps.
UnrolledModel init_from_iterative(const AltConfig& cfg, int num_layers, int pdhg_steps,
                                  int cg_steps, Variant variant = Variant::full);

/// Checkpoint JSON: {L,T,K,r,variant,layers:[{gl_spatial,gl_modality,sr:{kappa,xi,mu}}]}
/// storing raw values (gl blocks flattened t-major).
std::string model_to_json(const UnrolledModel& model);
UnrolledModel model_from_json(const std::string& text);
void save_model(const std::string& path, const UnrolledModel& model);
UnrolledModel load_model(const std::string& path);

}  // namespace twofold
