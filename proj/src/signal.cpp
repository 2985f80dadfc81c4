#include "twofold/signal.hpp"

#include <limits>

namespace twofold {

ObservationMask::ObservationMask(Matrix m) : m_(std::move(m)) {
  for (Eigen::Index i = 0; i < m_.rows(); ++i) {
    for (Eigen::Index j = 0; j < m_.cols(); ++j) {
      const double v = m_(i, j);
      if (v != 0.0 && v != 1.0) {
        throw ValidationError("ObservationMask: entry (" + std::to_string(i) + "," +
                              std::to_string(j) + ") is not binary");
      }
    }
  }
}

Matrix pinv_sqrt(const Matrix& psd, double cutoff) {
  if (!is_symmetric(psd, 1e-10 * std::max(1.0, psd.cwiseAbs().maxCoeff()))) {
    throw ValidationError("pinv_sqrt: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(psd);
  if (es.info() != Eigen::Success) throw NumericalError("pinv_sqrt: eigendecomposition failed");
  const Vector& lambda = es.eigenvalues();
  if (lambda.minCoeff() < -1e-8) {
    throw NumericalError("pinv_sqrt: matrix is not PSD (min eigenvalue " +
                         std::to_string(lambda.minCoeff()) + ")");
  }
  Vector f(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    f(i) = lambda(i) <= cutoff ? 0.0 : 1.0 / std::sqrt(lambda(i));
  }
  return es.eigenvectors() * f.asDiagonal() * es.eigenvectors().transpose();
}

MultimodalSignal sample_matrix_normal(const Matrix& l_s, const Matrix& l_m, std::uint64_t seed) {
  const Matrix a = pinv_sqrt(l_s);
  const Matrix b = pinv_sqrt(l_m);
  Rng rng(seed);
  Matrix z(l_s.rows(), l_m.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = rng.gaussian();
  return a * z * b;
}

MultimodalSignal sample_matrix_normal(const Laplacian& l_s, const SignedLaplacian& l_m,
                                      std::uint64_t seed) {
  return sample_matrix_normal(l_s.matrix(), l_m.matrix(), seed);
}

double twofold_smoothness(const Matrix& x, const Matrix& l_s, const Matrix& l_m) {
  if (l_s.rows() != x.rows() || l_s.cols() != x.rows()) {
    throw ValidationError("twofold_smoothness: spatial Laplacian size does not match rows of X");
  }
  if (l_m.rows() != x.cols() || l_m.cols() != x.cols()) {
    throw ValidationError("twofold_smoothness: modality Laplacian size does not match cols of X");
  }
  // tr(Lm X^T Ls X) = sum_ij (Lm)_ij (X^T Ls X)_ij for symmetric Lm
  const Matrix k = x.transpose() * (l_s * x);
  return l_m.cwiseProduct(k).sum();
}

Matrix modality_kernel(const Matrix& x, const Matrix& l_s) {
  if (l_s.rows() != x.rows() || l_s.cols() != x.rows()) {
    throw ValidationError("modality_kernel: Laplacian size does not match rows of X");
  }
  Matrix k = x.transpose() * (l_s * x);
  return 0.5 * (k + k.transpose());
}

Matrix spatial_kernel(const Matrix& x, const Matrix& l_m) {
  if (l_m.rows() != x.cols() || l_m.cols() != x.cols()) {
    throw ValidationError("spatial_kernel: Laplacian size does not match cols of X");
  }
  Matrix k = x * (l_m * x.transpose());
  return 0.5 * (k + k.transpose());
}

double noise_sigma2(const Matrix& x, double snr_db) {
  const double power = x.squaredNorm() / static_cast<double>(x.size());
  if (power == 0.0) throw ParameterError("noise_sigma2: SNR undefined for an all-zero signal");
  return power / std::pow(10.0, snr_db / 10.0);
}

MultimodalSignal add_noise_snr(const Matrix& x, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0) return x;  // "clean" sentinel
  const double sigma = std::sqrt(noise_sigma2(x, snr_db));
  Rng rng(seed);
  Matrix y = x;
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index j = 0; j < y.cols(); ++j) y(i, j) += sigma * rng.gaussian();
  return y;
}

}  // namespace twofold
