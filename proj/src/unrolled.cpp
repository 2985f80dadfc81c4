#include "twofold/unrolled.hpp"

#include "twofold/signal.hpp"

#include "json.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

namespace twofold {

using nlohmann::json;

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::fixed_modality: return "fixed-modality";
    case Variant::without_gl: return "without-gl";
  }
  throw ParameterError("variant_name: unknown variant");
}

Variant variant_from_name(const std::string& name) {
  if (name == "full") return Variant::full;
  if (name == "fixed-modality") return Variant::fixed_modality;
  if (name == "without-gl") return Variant::without_gl;
  throw ParameterError("unknown variant '" + name + "'");
}

double softplus(double raw) { return raw > 30.0 ? raw : std::log1p(std::exp(raw)); }

double inv_softplus(double value) {
  if (value <= 0.0) throw ParameterError("inv_softplus: value must be positive");
  return value > 30.0 ? value : std::log(std::expm1(value));
}

int UnrolledModel::params_per_layer() const {
  switch (variant) {
    case Variant::full: return 10 * pdhg_steps + 2 * cg_steps + 1;
    case Variant::fixed_modality: return 5 * pdhg_steps + 2 * cg_steps + 1;
    case Variant::without_gl: return 2 * cg_steps + 1;
  }
  throw ParameterError("params_per_layer: unknown variant");
}

int UnrolledModel::param_count() const { return num_layers * params_per_layer(); }

namespace {

void pack_gl(const std::vector<GlStepRaw>& steps, std::vector<double>& out) {
  for (const GlStepRaw& s : steps) {
    out.push_back(s.alpha);
    out.push_back(s.beta);
    out.push_back(s.gamma);
    out.push_back(s.tau);
    out.push_back(s.sigma);
  }
}

size_t unpack_gl(std::span<const double> raw, size_t pos, std::vector<GlStepRaw>& steps) {
  for (GlStepRaw& s : steps) {
    s.alpha = raw[pos++];
    s.beta = raw[pos++];
    s.gamma = raw[pos++];
    s.tau = raw[pos++];
    s.sigma = raw[pos++];
  }
  return pos;
}

std::vector<PdhgStepParams> effective_gl(const std::vector<GlStepRaw>& steps) {
  std::vector<PdhgStepParams> out;
  out.reserve(steps.size());
  for (const GlStepRaw& s : steps) {
    out.push_back({softplus(s.alpha), softplus(s.beta), softplus(s.gamma), softplus(s.tau),
                   softplus(s.sigma)});
  }
  return out;
}

}  // namespace

std::vector<double> UnrolledModel::pack() const {
  std::vector<double> out;
  out.reserve(static_cast<size_t>(param_count()));
  for (const LayerParams& layer : layers) {
    pack_gl(layer.gl_spatial, out);
    pack_gl(layer.gl_modality, out);
    out.insert(out.end(), layer.kappa_raw.begin(), layer.kappa_raw.end());
    out.insert(out.end(), layer.xi_raw.begin(), layer.xi_raw.end());
    out.push_back(layer.mu_raw);
  }
  return out;
}

void UnrolledModel::unpack(std::span<const double> raw) {
  if (static_cast<int>(raw.size()) != param_count()) {
    throw ParameterError("UnrolledModel::unpack: expected " + std::to_string(param_count()) +
                         " values, got " + std::to_string(raw.size()));
  }
  size_t pos = 0;
  for (LayerParams& layer : layers) {
    pos = unpack_gl(raw, pos, layer.gl_spatial);
    pos = unpack_gl(raw, pos, layer.gl_modality);
    for (double& v : layer.kappa_raw) v = raw[pos++];
    for (double& v : layer.xi_raw) v = raw[pos++];
    layer.mu_raw = raw[pos++];
  }
}

ForwardContext make_forward_context(const UnrolledModel& model, const Matrix& y,
                                    const Matrix& mask) {
  require_same_shape(y, mask, "make_forward_context");
  if (!y.allFinite()) throw ValidationError("forward: observation matrix has non-finite entries");
  ForwardContext ctx;
  ctx.y = y;
  ctx.mask = mask;
  ctx.l_s0 = observation_knn_laplacian(y, mask, model.knn_k);
  if (model.variant == Variant::fixed_modality) {
    ctx.l_m_fixed = laplacian_from_adjacency(path_graph(static_cast<int>(y.cols()))).matrix();
  } else if (model.variant == Variant::without_gl) {
    ctx.l_m_fixed = observation_knn_laplacian_cols(y, mask, model.knn_k);
  }
  return ctx;
}

namespace {

void run_layer(const UnrolledModel& model, const ForwardContext& ctx, int layer_index,
               LayerEntryState& st, CoeffMode mode, LayerOutputs* outputs) {
  const LayerParams& params = model.layers[static_cast<size_t>(layer_index)];
  const auto layer_tag = [layer_index](const char* module) {
    return "layer " + std::to_string(layer_index) + " " + module + ": ";
  };

  Matrix l_m;
  Matrix sign_c;
  try {
    if (model.variant == Variant::full) {
      // (i) modality graph module
      const Matrix k_m = modality_kernel(st.x, st.l_s);
      SignSurrogate sign = sign_surrogate(k_m, model.sign_rank, kSignSurrogateIters);
      const Matrix k_mag = modulate_kernel(k_m, sign.c);
      PdhgResult learned =
          pdhg_run(k_mag, st.w_m, st.u_m, effective_gl(params.gl_modality), /*tol=*/-1.0);
      st.w_m = std::move(learned.w);
      st.u_m = std::move(learned.dual);
      l_m = SignedLaplacian::from_magnitude_and_sign(st.w_m, sign.c).matrix();
      sign_c = std::move(sign.c);
    } else {
      l_m = ctx.l_m_fixed;
    }
  } catch (const NumericalError& e) {
    throw NumericalError(layer_tag("modality module") + e.what());
  }

  try {
    if (model.variant != Variant::without_gl) {
      // (ii) spatial graph module
      const Matrix k_s = spatial_kernel(st.x, l_m);
      PdhgResult learned =
          pdhg_run(k_s, st.w_s, st.u_s, effective_gl(params.gl_spatial), /*tol=*/-1.0);
      st.w_s = std::move(learned.w);
      st.u_s = std::move(learned.dual);
      st.l_s = std::move(learned.laplacian);
    }
  } catch (const NumericalError& e) {
    throw NumericalError(layer_tag("spatial module") + e.what());
  }

  try {
    // (iii) signal reconstruction module
    const double mu = softplus(params.mu_raw);
    CgResult cg;
    if (mode == CoeffMode::learned) {
      std::vector<double> kappa(params.kappa_raw.size()), xi(params.xi_raw.size());
      for (size_t i = 0; i < kappa.size(); ++i) kappa[i] = softplus(params.kappa_raw[i]);
      for (size_t i = 0; i < xi.size(); ++i) xi[i] = softplus(params.xi_raw[i]);
      cg = run_cg(ctx.y, ctx.mask, mu, st.l_s, l_m, st.x, model.cg_steps, /*eps_abs=*/-1.0, kappa,
                  xi);
    } else {
      cg = run_cg(ctx.y, ctx.mask, mu, st.l_s, l_m, st.x, model.cg_steps, /*eps_abs=*/-1.0);
    }
    st.x = std::move(cg.x);
    if (!st.x.allFinite()) throw NumericalError("non-finite signal iterate");
  } catch (const NumericalError& e) {
    throw NumericalError(layer_tag("signal module") + e.what());
  }

  if (outputs) {
    outputs->w_s = st.w_s;
    outputs->w_m = st.w_m;
    outputs->sign_c = sign_c;
    outputs->l_s = st.l_s;
    outputs->l_m = l_m;
  }
}

LayerEntryState initial_state(const ForwardContext& ctx) {
  LayerEntryState st;
  st.x = ctx.mask.cwiseProduct(ctx.y);
  st.l_s = ctx.l_s0;
  const int n = static_cast<int>(ctx.y.rows());
  const int m = static_cast<int>(ctx.y.cols());
  st.w_s = Matrix::Zero(n, n);
  st.u_s = Vector::Zero(n);
  st.w_m = Matrix::Zero(m, m);
  st.u_m = Vector::Zero(m);
  return st;
}

}  // namespace

ForwardResult forward(const UnrolledModel& model, const Matrix& y, const Matrix& mask,
                      CoeffMode mode) {
  const ForwardContext ctx = make_forward_context(model, y, mask);
  ForwardResult res;
  LayerEntryState st = initial_state(ctx);
  res.states.push_back(st);
  res.per_layer.resize(static_cast<size_t>(model.num_layers));
  for (int l = 0; l < model.num_layers; ++l) {
    run_layer(model, ctx, l, st, mode, &res.per_layer[static_cast<size_t>(l)]);
    res.states.push_back(st);
  }
  res.x = st.x;
  res.l_s = res.per_layer.empty() ? ctx.l_s0 : res.per_layer.back().l_s;
  res.l_m = res.per_layer.empty() ? ctx.l_m_fixed : res.per_layer.back().l_m;
  return res;
}

Matrix forward_from(const UnrolledModel& model, const ForwardContext& ctx, int layer_start,
                    LayerEntryState state, CoeffMode mode) {
  for (int l = layer_start; l < model.num_layers; ++l) {
    run_layer(model, ctx, l, state, mode, nullptr);
  }
  return state.x;
}

double loss_masked(const Matrix& x, const Matrix& x_gt, const Matrix& mask) {
  require_same_shape(x, x_gt, "loss_masked");
  require_same_shape(x, mask, "loss_masked");
  const Matrix err = (Matrix::Ones(x.rows(), x.cols()) - mask).cwiseProduct(x - x_gt);
  return err.squaredNorm() / static_cast<double>(x.size());
}

GradientResult gradient(const UnrolledModel& model, std::span<const Sample> batch, double fd_step,
                        int threads) {
  if (batch.empty()) throw ParameterError("gradient: empty batch");
  const int n_params = model.param_count();
  const int per_layer = model.params_per_layer();
  const size_t n_samples = batch.size();

  // base forward per sample; layer entry states are cached so a parameter of
  // layer l only costs a replay of layers l..L-1
  std::vector<ForwardContext> contexts(n_samples);
  std::vector<std::vector<LayerEntryState>> states(n_samples);
  GradientResult res;
  for (size_t s = 0; s < n_samples; ++s) {
    contexts[s] = make_forward_context(model, batch[s].y, batch[s].mask);
    ForwardResult fr = forward(model, batch[s].y, batch[s].mask);
    states[s] = std::move(fr.states);
    res.mean_loss += loss_masked(fr.x, batch[s].x_gt, batch[s].mask);
  }
  res.mean_loss /= static_cast<double>(n_samples);
  if (!std::isfinite(res.mean_loss)) throw NumericalError("gradient: non-finite loss");

  const std::vector<double> theta = model.pack();
  res.grad.assign(static_cast<size_t>(n_params), 0.0);

  auto eval_param = [&](int p, UnrolledModel& scratch, std::vector<double>& theta_scratch) {
    const int layer = p / per_layer;
    double diff_sum = 0.0;
    for (const double sign : {+1.0, -1.0}) {
      theta_scratch = theta;
      theta_scratch[static_cast<size_t>(p)] += sign * fd_step;
      scratch.unpack(theta_scratch);
      for (size_t s = 0; s < n_samples; ++s) {
        const Matrix x =
            forward_from(scratch, contexts[s], layer, states[s][static_cast<size_t>(layer)]);
        diff_sum += sign * loss_masked(x, batch[s].x_gt, batch[s].mask);
      }
    }
    res.grad[static_cast<size_t>(p)] = diff_sum / (2.0 * fd_step * static_cast<double>(n_samples));
  };

  if (threads <= 1) {
    UnrolledModel scratch = model;
    std::vector<double> theta_scratch;
    for (int p = 0; p < n_params; ++p) eval_param(p, scratch, theta_scratch);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        UnrolledModel scratch = model;
        std::vector<double> theta_scratch;
        for (int p = next.fetch_add(1); p < n_params; p = next.fetch_add(1)) {
          eval_param(p, scratch, theta_scratch);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  return res;
}

TrainResult train(UnrolledModel model, std::span<const Sample> batch, const TrainOptions& opts) {
  if (batch.empty()) throw ParameterError("train: empty training set");
  if (opts.epochs < 0) throw ParameterError("train: epochs must be >= 0");

  const int n = model.param_count();
  std::vector<double> theta = model.pack();
  std::vector<double> m1(static_cast<size_t>(n), 0.0), m2(static_cast<size_t>(n), 0.0);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  TrainResult out;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    GradientResult g = gradient(model, batch, opts.fd_step, opts.threads);
    if (!std::isfinite(g.mean_loss) || g.mean_loss > opts.divergence_threshold) {
      throw NumericalError("train: diverged at epoch " + std::to_string(epoch) + " (loss " +
                           std::to_string(g.mean_loss) + ")");
    }
    out.loss_curve.push_back(g.mean_loss);

    const double t = static_cast<double>(epoch + 1);
    const double corr1 = 1.0 - std::pow(beta1, t);
    const double corr2 = 1.0 - std::pow(beta2, t);
    for (int i = 0; i < n; ++i) {
      const double gi = g.grad[static_cast<size_t>(i)];
      m1[static_cast<size_t>(i)] = beta1 * m1[static_cast<size_t>(i)] + (1.0 - beta1) * gi;
      m2[static_cast<size_t>(i)] = beta2 * m2[static_cast<size_t>(i)] + (1.0 - beta2) * gi * gi;
      const double mhat = m1[static_cast<size_t>(i)] / corr1;
      const double vhat = m2[static_cast<size_t>(i)] / corr2;
      theta[static_cast<size_t>(i)] -= opts.lr * mhat / (std::sqrt(vhat) + eps);
    }
    model.unpack(theta);
  }
  out.model = std::move(model);
  return out;
}

UnrolledModel init_from_iterative(const AltConfig& cfg, int num_layers, int pdhg_steps,
                                  int cg_steps, Variant variant) {
  if (num_layers < 1 || pdhg_steps < 1 || cg_steps < 1) {
    throw ParameterError("init_from_iterative: L, T, K must all be >= 1");
  }
  UnrolledModel model;
  model.variant = variant;
  model.num_layers = num_layers;
  model.pdhg_steps = pdhg_steps;
  model.cg_steps = cg_steps;
  model.sign_rank = cfg.sign_cfg.rank;
  model.knn_k = cfg.knn_k;

  const auto gl_raw = [](const PdhgConfig& c) {
    return GlStepRaw{inv_softplus(c.alpha_fit), inv_softplus(c.beta_frob),
                     inv_softplus(c.gamma_log), inv_softplus(c.tau), inv_softplus(c.sigma)};
  };

  // kappa = 1, xi ~ 0: a plain gradient-step recursion. xi cannot be exactly
  // zero under the positive map, so it starts at 1e-4.
  const double kappa0 = inv_softplus(1.0);
  const double xi0 = inv_softplus(1e-4);
  const double mu0 = inv_softplus(cfg.mu);

  model.layers.resize(static_cast<size_t>(num_layers));
  for (LayerParams& layer : model.layers) {
    if (variant != Variant::without_gl) {
      layer.gl_spatial.assign(static_cast<size_t>(pdhg_steps), gl_raw(cfg.spatial_cfg));
    }
    if (variant == Variant::full) {
      layer.gl_modality.assign(static_cast<size_t>(pdhg_steps), gl_raw(cfg.modality_cfg));
    }
    layer.kappa_raw.assign(static_cast<size_t>(cg_steps), kappa0);
    layer.xi_raw.assign(static_cast<size_t>(cg_steps), xi0);
    layer.mu_raw = mu0;
  }
  return model;
}

std::string model_to_json(const UnrolledModel& model) {
  json j;
  j["L"] = model.num_layers;
  j["T"] = model.pdhg_steps;
  j["K"] = model.cg_steps;
  j["r"] = model.sign_rank;
  j["variant"] = variant_name(model.variant);
  j["layers"] = json::array();
  for (const LayerParams& layer : model.layers) {
    json jl;
    std::vector<double> spatial, modality;
    pack_gl(layer.gl_spatial, spatial);
    pack_gl(layer.gl_modality, modality);
    jl["gl_spatial"] = spatial;
    jl["gl_modality"] = modality;
    jl["sr"] = {{"kappa", layer.kappa_raw}, {"xi", layer.xi_raw}, {"mu", layer.mu_raw}};
    j["layers"].push_back(std::move(jl));
  }
  return j.dump(2);
}

UnrolledModel model_from_json(const std::string& text) {
  json j = json::parse(text);
  UnrolledModel model;
  model.num_layers = j.at("L").get<int>();
  model.pdhg_steps = j.at("T").get<int>();
  model.cg_steps = j.at("K").get<int>();
  model.sign_rank = j.at("r").get<int>();
  model.variant = variant_from_name(j.at("variant").get<std::string>());
  model.layers.resize(static_cast<size_t>(model.num_layers));
  if (j.at("layers").size() != model.layers.size()) {
    throw ValidationError("model_from_json: layer count does not match L");
  }
  const int t_steps = model.pdhg_steps;
  for (size_t l = 0; l < model.layers.size(); ++l) {
    const json& jl = j.at("layers")[l];
    LayerParams& layer = model.layers[l];
    const auto spatial = jl.at("gl_spatial").get<std::vector<double>>();
    const auto modality = jl.at("gl_modality").get<std::vector<double>>();
    const auto expect = [&](const std::vector<double>& v, size_t want, const char* what) {
      if (v.size() != want) {
        throw ValidationError(std::string("model_from_json: ") + what + " has " +
                              std::to_string(v.size()) + " values, expected " +
                              std::to_string(want));
      }
    };
    const bool has_spatial = model.variant != Variant::without_gl;
    const bool has_modality = model.variant == Variant::full;
    expect(spatial, has_spatial ? static_cast<size_t>(5 * t_steps) : 0, "gl_spatial");
    expect(modality, has_modality ? static_cast<size_t>(5 * t_steps) : 0, "gl_modality");
    layer.gl_spatial.resize(spatial.size() / 5);
    layer.gl_modality.resize(modality.size() / 5);
    unpack_gl(spatial, 0, layer.gl_spatial);
    unpack_gl(modality, 0, layer.gl_modality);
    layer.kappa_raw = jl.at("sr").at("kappa").get<std::vector<double>>();
    layer.xi_raw = jl.at("sr").at("xi").get<std::vector<double>>();
    expect(layer.kappa_raw, static_cast<size_t>(model.cg_steps), "kappa");
    expect(layer.xi_raw, static_cast<size_t>(model.cg_steps), "xi");
    layer.mu_raw = jl.at("sr").at("mu").get<double>();
  }
  return model;
}

void save_model(const std::string& path, const UnrolledModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("save_model: cannot open '" + path + "'");
  out << model_to_json(model) << "\n";
}

UnrolledModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("load_model: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace twofold
