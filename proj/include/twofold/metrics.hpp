#pragma once

#include "twofold/common.hpp"

#include <string>
#include <vector>

namespace twofold {

/// Half-open column ranges [begin, end) delimiting per-modality blocks.
struct ModalityBlocks {
  std::vector<std::pair<int, int>> ranges;

  static ModalityBlocks uniform(int cols, int n_blocks);
  static ModalityBlocks single(int cols) { return uniform(cols, 1); }
  /// One block per community label (synthetic datasets).
  static ModalityBlocks from_labels(const std::vector<int>& labels, int n_communities);

  // from_labels produces index sets, not ranges; both forms are supported
  std::vector<std::vector<int>> columns;  // non-empty overrides ranges
  std::vector<std::vector<int>> resolve(int cols) const;
};

struct MetricsReport {
  double masked_mse_nm = 0.0;       // masked error normalized by N*M (training-loss convention)
  double masked_mse_missing = 0.0;  // masked error normalized by the missing-entry count
  double whole_mse = 0.0;
  std::vector<double> per_modality_nmse;
  double runtime_s = 0.0;
  std::string method;
  int fold = 0;
  double snr_db = 0.0;
  double rate = 0.0;
  std::string pattern;
  int sample = 0;
};

MetricsReport evaluate(const Matrix& x_hat, const Matrix& x_gt, const Matrix& mask,
                       const ModalityBlocks& blocks);

}  // namespace twofold
