#include "twofold/experiment.hpp"

#include "twofold/baselines.hpp"
#include "twofold/matrix_io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>
#include <tuple>

namespace twofold {

namespace fs = std::filesystem;

void ExperimentConfig::validate() const {
  for (const std::string& m : methods) {
    if (std::find(kKnownMethods.begin(), kKnownMethods.end(), m) == kKnownMethods.end()) {
      throw ParameterError("unknown method '" + m + "'");
    }
  }
  if (threads < 1) throw ParameterError("threads must be >= 1");
  if (epochs < 0) throw ParameterError("epochs must be >= 0");
}

namespace {

struct Cell {
  int fold = 0;
  std::string pattern;
  double rate = 0.0;
  double snr_db = 0.0;
};

struct PreparedData {
  // one entry per fold; synthetic folds carry their graphs for metric blocks
  std::vector<FoldData> synth_folds;
  std::vector<RealFold> real_folds;
  std::vector<RealSample> real_samples;
  bool real = false;
  int n = 0, m = 0;
};

Matrix cell_mask(const DatasetManifest& manifest, const PreparedData& data, const Cell& cell,
                 int fold, int sample) {
  const MaskPattern pattern = mask_pattern_from_name(cell.pattern);
  std::optional<DayLayout> layout;
  if (data.real) layout = DayLayout{kRealModalities, kRealDaysPerMonth};
  return gen_mask(data.n, data.m, pattern, cell.rate,
                  mask_seed(manifest, fold, sample, pattern, cell.rate), 14, layout);
}

std::vector<Sample> assemble_samples(const DatasetManifest& manifest, const PreparedData& data,
                                     const Cell& cell, bool validation) {
  std::vector<Sample> out;
  if (data.real) {
    const RealFold& fold = data.real_folds[static_cast<size_t>(cell.fold)];
    const auto& indices = validation ? fold.validation_indices : fold.train_indices;
    for (const int idx : indices) {
      const Matrix& clean = fold.standardized[static_cast<size_t>(idx)];
      Sample s;
      s.x_gt = clean;
      s.y = add_noise_snr(clean, cell.snr_db, noise_seed(manifest, cell.fold, idx, cell.snr_db));
      s.mask = cell_mask(manifest, data, cell, cell.fold, idx);
      out.push_back(std::move(s));
    }
    return out;
  }
  for (int fold = 0; fold < manifest.folds; ++fold) {
    if (validation != (fold == cell.fold)) continue;
    const FoldData& fd = data.synth_folds[static_cast<size_t>(fold)];
    for (int s = 0; s < manifest.samples_per_fold; ++s) {
      const Matrix& clean = fd.clean[static_cast<size_t>(s)];
      Sample sample;
      sample.x_gt = clean;
      sample.y = add_noise_snr(clean, cell.snr_db, noise_seed(manifest, fold, s, cell.snr_db));
      sample.mask = cell_mask(manifest, data, cell, fold, s);
      out.push_back(std::move(sample));
    }
  }
  return out;
}

ModalityBlocks cell_blocks(const PreparedData& data, const Cell& cell) {
  if (data.real) return ModalityBlocks::uniform(kRealColumns, kRealModalities);
  const CommunityAssignment& a = data.synth_folds[static_cast<size_t>(cell.fold)].graphs.assignment;
  return ModalityBlocks::from_labels(a.labels, a.n_communities);
}

double mean_masked_mse(const std::vector<Sample>& samples,
                       const std::vector<Matrix>& restored) {
  double total = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    const Matrix hole = Matrix::Ones(samples[i].mask.rows(), samples[i].mask.cols()) -
                        samples[i].mask;
    total += hole.cwiseProduct(restored[i] - samples[i].x_gt).squaredNorm() /
             std::max(1.0, hole.sum());
  }
  return total / static_cast<double>(samples.size());
}

std::string trim_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

struct MethodState {
  double glf_alpha = 1.0;
  int svd_rank = 1;
  AltConfig alt;
  UnrolledModel model;  // unrolled methods
  bool has_model = false;
  bool train_diverged = false;
  std::string divergence_message;
};

AltConfig cell_alt_config(const ExperimentConfig& cfg, int n, int m) {
  if (!cfg.alt_is_default) return cfg.alt;
  return default_alt_config(n, m);
}

MethodState prepare_method(const std::string& method, const DatasetManifest&,
                           const ExperimentConfig& cfg, const std::vector<Sample>& train_set,
                           const PreparedData& data) {
  MethodState st;
  st.alt = cell_alt_config(cfg, data.n, data.m);

  if (method == "glf") {
    double best = std::numeric_limits<double>::infinity();
    for (const double alpha : cfg.glf_alphas) {
      std::vector<Matrix> restored;
      restored.reserve(train_set.size());
      for (const Sample& s : train_set) {
        restored.push_back(baseline_glf(s.y, s.mask, observation_knn_laplacian(s.y, s.mask), alpha));
      }
      const double mse = mean_masked_mse(train_set, restored);
      if (mse < best) {
        best = mse;
        st.glf_alpha = alpha;
      }
    }
  } else if (method == "svd") {
    double best = std::numeric_limits<double>::infinity();
    const int max_rank = std::min(data.n, data.m);
    for (const int rank : cfg.svd_ranks) {
      if (rank > max_rank) continue;
      std::vector<Matrix> restored;
      restored.reserve(train_set.size());
      for (const Sample& s : train_set) restored.push_back(baseline_svd(s.y, s.mask, rank));
      const double mse = mean_masked_mse(train_set, restored);
      if (mse < best) {
        best = mse;
        st.svd_rank = rank;
      }
    }
  } else if (method == "iterative") {
    double best = std::numeric_limits<double>::infinity();
    AltConfig best_cfg = st.alt;
    for (const double mu : cfg.iterative_mus) {
      for (const double alpha : cfg.iterative_alphas) {
        AltConfig candidate = st.alt;
        candidate.mu = mu;
        candidate.spatial_cfg.alpha_fit = alpha;
        candidate.modality_cfg.alpha_fit = alpha;
        std::vector<Matrix> restored;
        restored.reserve(train_set.size());
        for (const Sample& s : train_set) restored.push_back(alternate(s.y, s.mask, candidate).x);
        const double mse = mean_masked_mse(train_set, restored);
        if (mse < best) {
          best = mse;
          best_cfg = candidate;
        }
      }
    }
    st.alt = best_cfg;
  } else {
    Variant variant = Variant::full;
    if (method == "unrolled-fixed-modality") variant = Variant::fixed_modality;
    if (method == "unrolled-without-gl") variant = Variant::without_gl;
    UnrolledModel model =
        init_from_iterative(st.alt, cfg.num_layers, cfg.pdhg_steps, cfg.cg_steps, variant);
    TrainOptions opts;
    opts.epochs = cfg.epochs;
    opts.lr = cfg.lr;
    opts.fd_step = cfg.fd_step;
    try {
      TrainResult tr = train(std::move(model), train_set, opts);
      st.model = std::move(tr.model);
    } catch (const NumericalError& e) {
      // recorded, not fatal: the cell is evaluated with the initial model
      st.train_diverged = true;
      st.divergence_message = e.what();
      st.model = init_from_iterative(st.alt, cfg.num_layers, cfg.pdhg_steps, cfg.cg_steps, variant);
    }
    st.has_model = true;
  }
  return st;
}

Matrix apply_method(const std::string& method, const MethodState& st, const Sample& s) {
  if (method == "glf") {
    return baseline_glf(s.y, s.mask, observation_knn_laplacian(s.y, s.mask), st.glf_alpha);
  }
  if (method == "svd") return baseline_svd(s.y, s.mask, st.svd_rank);
  if (method == "iterative") return alternate(s.y, s.mask, st.alt).x;
  return forward(st.model, s.y, s.mask).x;
}

void dump_learned(const std::string& method, const MethodState& st, const Cell& cell,
                  const Sample& first_val, const std::string& out_dir) {
  if (!st.has_model) return;
  const std::string tag = method + "_fold" + std::to_string(cell.fold) + "_" + cell.pattern +
                          "_r" + trim_number(cell.rate) + "_snr" + trim_number(cell.snr_db);

  const fs::path graph_dir = fs::path(out_dir) / "graphs";
  fs::create_directories(graph_dir);
  const ForwardResult fr = forward(st.model, first_val.y, first_val.mask);
  for (size_t l = 0; l < fr.per_layer.size(); ++l) {
    const LayerOutputs& lo = fr.per_layer[l];
    if (lo.w_s.size() > 0) {
      save_matrix_csv((graph_dir / (tag + "_layer" + std::to_string(l) + "_W_s.csv")).string(),
                      lo.w_s);
    }
    if (lo.w_m.size() > 0 && lo.sign_c.size() > 0) {
      save_matrix_csv(
          (graph_dir / (tag + "_layer" + std::to_string(l) + "_W_m_signed.csv")).string(),
          lo.sign_c.cwiseProduct(lo.w_m));
    }
  }

  const fs::path param_dir = fs::path(out_dir) / "params";
  fs::create_directories(param_dir);
  std::ofstream out(param_dir / (tag + "_params.csv"), std::ios::binary);
  out << "layer,module,step,param,raw,effective\n";
  const auto emit_gl = [&](int layer, const char* module, const std::vector<GlStepRaw>& steps) {
    const char* names[5] = {"alpha_fit", "beta_frob", "gamma_log", "tau", "sigma"};
    for (size_t t = 0; t < steps.size(); ++t) {
      const double raw[5] = {steps[t].alpha, steps[t].beta, steps[t].gamma, steps[t].tau,
                             steps[t].sigma};
      for (int p = 0; p < 5; ++p) {
        out << layer << ',' << module << ',' << t << ',' << names[p] << ','
            << format_double(raw[p]) << ',' << format_double(softplus(raw[p])) << '\n';
      }
    }
  };
  for (int l = 0; l < st.model.num_layers; ++l) {
    const LayerParams& lp = st.model.layers[static_cast<size_t>(l)];
    emit_gl(l, "spatial", lp.gl_spatial);
    emit_gl(l, "modality", lp.gl_modality);
    for (size_t k = 0; k < lp.kappa_raw.size(); ++k) {
      out << l << ",signal," << k << ",kappa," << format_double(lp.kappa_raw[k]) << ','
          << format_double(softplus(lp.kappa_raw[k])) << '\n';
      out << l << ",signal," << k << ",xi," << format_double(lp.xi_raw[k]) << ','
          << format_double(softplus(lp.xi_raw[k])) << '\n';
    }
    out << l << ",signal,0,mu," << format_double(lp.mu_raw) << ','
        << format_double(softplus(lp.mu_raw)) << '\n';
  }
}

}  // namespace

std::string rows_to_csv(const std::vector<ExperimentRow>& rows) {
  size_t n_blocks = 0;
  for (const ExperimentRow& r : rows) n_blocks = std::max(n_blocks, r.per_modality_nmse.size());
  std::string out = "method,fold,pattern,rate,snr_db,masked_mse_nm,masked_mse_missing,whole_mse";
  for (size_t b = 0; b < n_blocks; ++b) out += ",nmse_mod" + std::to_string(b + 1);
  out += ",runtime_s\n";
  for (const ExperimentRow& r : rows) {
    out += r.method + ',' + std::to_string(r.fold) + ',' + r.pattern + ',' + trim_number(r.rate) +
           ',' + trim_number(r.snr_db) + ',' + format_double(r.masked_mse_nm) + ',' +
           format_double(r.masked_mse_missing) + ',' + format_double(r.whole_mse);
    for (size_t b = 0; b < n_blocks; ++b) {
      out += ',';
      out += b < r.per_modality_nmse.size() ? format_double(r.per_modality_nmse[b]) : "0";
    }
    out += ',' + format_double(r.runtime_s) + '\n';
  }
  return out;
}

ExperimentResult run_experiment(const DatasetManifest& manifest, const ExperimentConfig& cfg) {
  manifest.validate();
  cfg.validate();
  fs::create_directories(cfg.out_dir);

  PreparedData data;
  int n_folds = 0;
  if (manifest.kind == "real") {
    data.real = true;
    data.real_samples = ingest_real(manifest.csv_dir, manifest);
    data.real_folds = make_loyo_folds(data.real_samples);
    n_folds = static_cast<int>(data.real_folds.size());
    data.n = static_cast<int>(data.real_samples.front().x.rows());
    data.m = kRealColumns;
  } else {
    for (int f = 0; f < manifest.folds; ++f) data.synth_folds.push_back(generate_fold(manifest, f));
    n_folds = manifest.folds;
    data.n = manifest.n;
    data.m = manifest.m;
  }

  std::vector<Cell> cells;
  for (int fold = 0; fold < n_folds; ++fold)
    for (const std::string& pattern : manifest.patterns)
      for (const double rate : manifest.rates)
        for (const double snr : manifest.snr_db) cells.push_back({fold, pattern, rate, snr});
  if (cells.empty()) throw ParameterError("run_experiment: the manifest defines no cells");

  std::vector<std::vector<ExperimentRow>> cell_rows(cells.size());
  std::vector<std::vector<std::string>> cell_diagnostics(cells.size());

  const auto process_cell = [&](size_t ci) {
    const Cell& cell = cells[ci];
    const std::vector<Sample> train_set = assemble_samples(manifest, data, cell, false);
    const std::vector<Sample> val_set = assemble_samples(manifest, data, cell, true);
    const ModalityBlocks blocks = cell_blocks(data, cell);

    for (const std::string& method : cfg.methods) {
      const auto t0 = std::chrono::steady_clock::now();
      const MethodState st = prepare_method(method, manifest, cfg, train_set, data);

      ExperimentRow row;
      row.method = method;
      row.fold = cell.fold;
      row.pattern = cell.pattern;
      row.rate = cell.rate;
      row.snr_db = cell.snr_db;
      for (const Sample& s : val_set) {
        const Matrix x_hat = apply_method(method, st, s);
        const MetricsReport rep = evaluate(x_hat, s.x_gt, s.mask, blocks);
        row.masked_mse_nm += rep.masked_mse_nm;
        row.masked_mse_missing += rep.masked_mse_missing;
        row.whole_mse += rep.whole_mse;
        if (row.per_modality_nmse.empty()) row.per_modality_nmse.assign(rep.per_modality_nmse.size(), 0.0);
        for (size_t b = 0; b < rep.per_modality_nmse.size(); ++b)
          row.per_modality_nmse[b] += rep.per_modality_nmse[b];
      }
      const double inv = 1.0 / static_cast<double>(std::max<size_t>(1, val_set.size()));
      row.masked_mse_nm *= inv;
      row.masked_mse_missing *= inv;
      row.whole_mse *= inv;
      for (double& v : row.per_modality_nmse) v *= inv;
      if (cfg.measure_runtime) {
        row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
      cell_rows[ci].push_back(std::move(row));

      if (st.train_diverged) {
        cell_diagnostics[ci].push_back(method + " fold " + std::to_string(cell.fold) + " " +
                                       cell.pattern + " rate " + trim_number(cell.rate) + " snr " +
                                       trim_number(cell.snr_db) + ": " + st.divergence_message);
      }
      if (st.has_model && !val_set.empty()) {
        dump_learned(method, st, cell, val_set.front(), cfg.out_dir);
      }
    }
  };

  if (cfg.threads <= 1) {
    for (size_t ci = 0; ci < cells.size(); ++ci) process_cell(ci);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(cfg.threads, static_cast<int>(cells.size()));
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back([&] {
        for (size_t ci = next.fetch_add(1); ci < cells.size(); ci = next.fetch_add(1)) {
          process_cell(ci);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  ExperimentResult result;
  for (const auto& rows : cell_rows) {
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  {
    std::ofstream divergence_log(fs::path(cfg.out_dir) / "divergence.log", std::ios::binary);
    for (const auto& messages : cell_diagnostics)
      for (const std::string& msg : messages) divergence_log << msg << "\n";
  }
  std::sort(result.rows.begin(), result.rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a.method, a.fold, a.pattern, a.rate, a.snr_db) <
           std::tie(b.method, b.fold, b.pattern, b.rate, b.snr_db);
  });

  result.report_path = (fs::path(cfg.out_dir) / "report.csv").string();
  {
    std::ofstream out(result.report_path, std::ios::binary);
    out << rows_to_csv(result.rows);
  }

  // aggregate mean +- std per (method, pattern, rate, snr) across folds
  result.aggregate_path = (fs::path(cfg.out_dir) / "aggregate.csv").string();
  {
    std::map<std::tuple<std::string, std::string, double, double>, std::vector<const ExperimentRow*>>
        groups;
    for (const ExperimentRow& r : result.rows) {
      groups[{r.method, r.pattern, r.rate, r.snr_db}].push_back(&r);
    }
    std::ofstream out(result.aggregate_path, std::ios::binary);
    out << "method,pattern,rate,snr_db,masked_mse_nm_mean,masked_mse_nm_std,"
           "masked_mse_missing_mean,masked_mse_missing_std,whole_mse_mean,whole_mse_std\n";
    for (const auto& [key, rows] : groups) {
      const auto stats = [&rows](auto metric) {
        double mean = 0.0;
        for (const ExperimentRow* r : rows) mean += metric(*r);
        mean /= static_cast<double>(rows.size());
        double var = 0.0;
        for (const ExperimentRow* r : rows) var += (metric(*r) - mean) * (metric(*r) - mean);
        var /= static_cast<double>(rows.size());
        return std::pair<double, double>{mean, std::sqrt(var)};
      };
      const auto [m1, s1] = stats([](const ExperimentRow& r) { return r.masked_mse_nm; });
      const auto [m2, s2] = stats([](const ExperimentRow& r) { return r.masked_mse_missing; });
      const auto [m3, s3] = stats([](const ExperimentRow& r) { return r.whole_mse; });
      out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << trim_number(std::get<2>(key))
          << ',' << trim_number(std::get<3>(key)) << ',' << format_double(m1) << ','
          << format_double(s1) << ',' << format_double(m2) << ',' << format_double(s2) << ','
          << format_double(m3) << ',' << format_double(s3) << '\n';
    }
  }
  return result;
}

}  // namespace twofold
