#pragma once

#include "twofold/common.hpp"
#include "twofold/graph.hpp"

#include <cstdint>

namespace twofold {

/// Binary observation matrix: 1 = observed, 0 = missing.
class ObservationMask {
public:
  explicit ObservationMask(Matrix m);
  static ObservationMask all_observed(int rows, int cols) {
    return ObservationMask(Matrix::Ones(rows, cols), Unchecked{});
  }
  static ObservationMask unchecked(Matrix m) { return ObservationMask(std::move(m), Unchecked{}); }

  const Matrix& matrix() const { return m_; }
  Eigen::Index missing_count() const {
    return static_cast<Eigen::Index>(m_.size()) - static_cast<Eigen::Index>(m_.sum());
  }

private:
  struct Unchecked {};
  ObservationMask(Matrix m, Unchecked) : m_(std::move(m)) {}
  Matrix m_;
};

/// V diag(f(lambda)) V^T of a symmetric PSD matrix, with eigenvalues below
/// `cutoff` treated as exactly zero. Used for pseudo-inverse square roots.
/// Throws NumericalError if the smallest eigenvalue is below -1e-8.
Matrix pinv_sqrt(const Matrix& psd, double cutoff = 1e-10);

/// Draw X = A Z B with A = Ls^{+/2}, B = Lm^{+/2} and Z i.i.d. standard
/// normal; Cov(vec X) = Lm^+ (Kronecker) Ls^+. Deterministic per seed.
/// Accepts any symmetric PSD precision matrices (signed Laplacians included).
MultimodalSignal sample_matrix_normal(const Matrix& l_s, const Matrix& l_m, std::uint64_t seed);
MultimodalSignal sample_matrix_normal(const Laplacian& l_s, const SignedLaplacian& l_m,
                                      std::uint64_t seed);

/// tr(Lm X^T Ls X), evaluated with two matrix products.
double twofold_smoothness(const Matrix& x, const Matrix& l_s, const Matrix& l_m);

/// K = X^T Ls X (M x M), symmetrized to kill roundoff asymmetry.
Matrix modality_kernel(const Matrix& x, const Matrix& l_s);

/// K = X Lm X^T (N x N), symmetrized.
Matrix spatial_kernel(const Matrix& x, const Matrix& l_m);

/// Per-entry noise variance for a target SNR: (||X||_F^2/(NM)) / 10^(snr/10).
double noise_sigma2(const Matrix& x, double snr_db);

/// Y = X + E with E_ij ~ N(0, sigma^2) at the given SNR. snr_db = +inf
/// returns X unchanged (the "clean" configuration).
MultimodalSignal add_noise_snr(const Matrix& x, double snr_db, std::uint64_t seed);

}  // namespace twofold
