#include "twofold/baselines.hpp"

namespace twofold {

MultimodalSignal baseline_glf(const Matrix& y, const Matrix& mask, const Matrix& laplacian,
                              double alpha) {
  require_same_shape(y, mask, "baseline_glf");
  if (alpha < 0) throw ParameterError("baseline_glf: alpha must be >= 0");
  if (laplacian.rows() != y.rows()) {
    throw ValidationError("baseline_glf: Laplacian size does not match rows of Y");
  }
  const Matrix filled = mask.cwiseProduct(y);
  const Matrix system =
      Matrix::Identity(y.rows(), y.rows()) + alpha * laplacian;  // PD for alpha >= 0
  return system.ldlt().solve(filled);
}

MultimodalSignal baseline_svd(const Matrix& y, const Matrix& mask, int rank, int iters) {
  require_same_shape(y, mask, "baseline_svd");
  const int max_rank = static_cast<int>(std::min(y.rows(), y.cols()));
  if (rank < 1 || rank > max_rank) {
    throw ParameterError("baseline_svd: rank must lie in [1, min(N,M)]");
  }
  const Matrix observed = mask.cwiseProduct(y);
  const Matrix hole = Matrix::Ones(y.rows(), y.cols()) - mask;
  Matrix x = observed;
  for (int it = 0; it < iters; ++it) {
    Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Matrix truncated = svd.matrixU().leftCols(rank) *
                             svd.singularValues().head(rank).asDiagonal() *
                             svd.matrixV().leftCols(rank).transpose();
    x = observed + hole.cwiseProduct(truncated);
  }
  return x;
}

}  // namespace twofold
