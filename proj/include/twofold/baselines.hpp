#pragma once

#include "twofold/common.hpp"

namespace twofold {

/// Per-column graph low-pass filter x_c = (I + alpha L)^{-1} y_c after
/// zero-filling missing entries (zero is the standardized mean).
MultimodalSignal baseline_glf(const Matrix& y, const Matrix& mask, const Matrix& laplacian,
                              double alpha);

/// Iterative hard-impute with a rank-r truncated SVD:
/// X <- mask o Y + (1 - mask) o truncSVD_r(X).
MultimodalSignal baseline_svd(const Matrix& y, const Matrix& mask, int rank, int iters = 25);

}  // namespace twofold
