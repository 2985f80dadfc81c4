#pragma once

#include "twofold/datasets.hpp"
#include "twofold/metrics.hpp"
#include "twofold/unrolled.hpp"

#include <string>
#include <vector>

namespace twofold {

inline const std::vector<std::string> kKnownMethods = {
    "glf", "svd", "iterative", "unrolled-full", "unrolled-fixed-modality", "unrolled-without-gl"};

struct ExperimentConfig {
  std::vector<std::string> methods = {"glf", "svd"};
  std::string out_dir = "out";
  int threads = 1;

  // unrolled architecture and training
  int num_layers = 3;
  int pdhg_steps = 5;
  int cg_steps = 5;
  int epochs = 50;
  double lr = 0.01;
  double fd_step = 1e-4;

  // baseline hyperparameter grids, searched on the training folds
  std::vector<double> glf_alphas = {0.1, 0.5, 1.0, 5.0, 10.0};
  std::vector<int> svd_ranks = {1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<double> iterative_mus = {0.1, 0.5, 2.0};
  std::vector<double> iterative_alphas = {0.5, 2.0};

  /// Base solver configuration; tau/sigma defaults are derived from the
  /// problem sizes when left at zero.
  AltConfig alt;
  bool alt_is_default = true;

  /// Report files are byte-reproducible; wall-clock timings are opt-in.
  bool measure_runtime = false;

  void validate() const;
};

struct ExperimentRow {
  std::string method;
  int fold = 0;
  std::string pattern;
  double rate = 0.0;
  double snr_db = 0.0;
  double masked_mse_nm = 0.0;
  double masked_mse_missing = 0.0;
  double whole_mse = 0.0;
  std::vector<double> per_modality_nmse;
  double runtime_s = 0.0;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  std::string report_path;
  std::string aggregate_path;
};

/// Full cross-validated benchmark: per fold, tune/train each method on the
/// training folds and evaluate on the held-out fold across every
/// (pattern, rate, snr) cell. Writes report.csv, aggregate.csv, learned-graph
/// dumps and parameter tables under cfg.out_dir.
ExperimentResult run_experiment(const DatasetManifest& manifest, const ExperimentConfig& cfg);

std::string rows_to_csv(const std::vector<ExperimentRow>& rows);

}  // namespace twofold
