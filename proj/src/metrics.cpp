#include "twofold/metrics.hpp"

#include <algorithm>

namespace twofold {

ModalityBlocks ModalityBlocks::uniform(int cols, int n_blocks) {
  if (n_blocks < 1 || cols % n_blocks != 0) {
    throw ParameterError("ModalityBlocks::uniform: block count must divide the column count");
  }
  ModalityBlocks b;
  const int width = cols / n_blocks;
  for (int i = 0; i < n_blocks; ++i) b.ranges.emplace_back(i * width, (i + 1) * width);
  return b;
}

ModalityBlocks ModalityBlocks::from_labels(const std::vector<int>& labels, int n_communities) {
  ModalityBlocks b;
  b.columns.resize(static_cast<size_t>(n_communities));
  for (size_t c = 0; c < labels.size(); ++c) {
    if (labels[c] < 0 || labels[c] >= n_communities) {
      throw ParameterError("ModalityBlocks::from_labels: label out of range");
    }
    b.columns[static_cast<size_t>(labels[c])].push_back(static_cast<int>(c));
  }
  return b;
}

std::vector<std::vector<int>> ModalityBlocks::resolve(int cols) const {
  if (!columns.empty()) return columns;
  std::vector<std::vector<int>> out;
  for (const auto& [begin, end] : ranges) {
    if (begin < 0 || end > cols || begin >= end) {
      throw ParameterError("ModalityBlocks: range outside the column count");
    }
    std::vector<int> block;
    for (int c = begin; c < end; ++c) block.push_back(c);
    out.push_back(std::move(block));
  }
  return out;
}

MetricsReport evaluate(const Matrix& x_hat, const Matrix& x_gt, const Matrix& mask,
                       const ModalityBlocks& blocks) {
  require_same_shape(x_hat, x_gt, "evaluate");
  require_same_shape(x_hat, mask, "evaluate");

  const double nm = static_cast<double>(x_hat.size());
  const Matrix hole = Matrix::Ones(x_hat.rows(), x_hat.cols()) - mask;
  const Matrix err = x_hat - x_gt;
  const double masked_err2 = hole.cwiseProduct(err).squaredNorm();
  const double missing = hole.sum();

  MetricsReport r;
  r.masked_mse_nm = masked_err2 / nm;
  r.masked_mse_missing = masked_err2 / std::max(1.0, missing);
  r.whole_mse = err.squaredNorm() / nm;

  for (const std::vector<int>& block : blocks.resolve(static_cast<int>(x_hat.cols()))) {
    double num = 0.0, den = 0.0;
    for (const int c : block) {
      num += hole.col(c).cwiseProduct(err.col(c)).squaredNorm();
      den += hole.col(c).cwiseProduct(x_gt.col(c)).squaredNorm();
    }
    // a block with no missing energy contributes zero rather than 0/0
    r.per_modality_nmse.push_back(den > 0.0 ? num / den : 0.0);
  }
  return r;
}

}  // namespace twofold
