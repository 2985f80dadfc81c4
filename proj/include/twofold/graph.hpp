#pragma once

#include "twofold/common.hpp"

namespace twofold {

/// Symmetric, nonnegative, hollow edge-weight matrix of an unsigned graph.
class AdjacencyMatrix {
public:
  /// Validates all three invariants; throws ValidationError naming the first violated one.
  explicit AdjacencyMatrix(Matrix w);

  /// Wraps a matrix the caller guarantees to be valid (e.g. projection output).
  static AdjacencyMatrix unchecked(Matrix w) { return AdjacencyMatrix(std::move(w), Unchecked{}); }

  int size() const { return static_cast<int>(w_.rows()); }
  const Matrix& matrix() const { return w_; }

private:
  struct Unchecked {};
  AdjacencyMatrix(Matrix w, Unchecked) : w_(std::move(w)) {}
  Matrix w_;
};

/// Symmetric hollow weight matrix whose entries may be negative.
class SignedAdjacency {
public:
  explicit SignedAdjacency(Matrix w);
  static SignedAdjacency unchecked(Matrix w) { return SignedAdjacency(std::move(w), Unchecked{}); }

  int size() const { return static_cast<int>(w_.rows()); }
  const Matrix& matrix() const { return w_; }

private:
  struct Unchecked {};
  SignedAdjacency(Matrix w, Unchecked) : w_(std::move(w)) {}
  Matrix w_;
};

/// Combinatorial Laplacian L = diag(W1) - W of an unsigned graph.
class Laplacian {
public:
  int size() const { return static_cast<int>(l_.rows()); }
  const Matrix& matrix() const { return l_; }

private:
  friend Laplacian laplacian_from_adjacency(const AdjacencyMatrix& w);
  explicit Laplacian(Matrix l) : l_(std::move(l)) {}
  Matrix l_;
};

/// Signed Laplacian with absolute degrees: diagonally dominant, hence PSD.
class SignedLaplacian {
public:
  int size() const { return static_cast<int>(l_.rows()); }
  const Matrix& matrix() const { return l_; }

  /// diag(W_m 1) - C o W_m for |C_ij| <= 1: the continuous-sign form used by
  /// the modality learner. Diagonal dominance (and PSD-ness) is preserved.
  static SignedLaplacian from_magnitude_and_sign(const Matrix& w_mag, const Matrix& sign);

private:
  friend SignedLaplacian signed_laplacian(const SignedAdjacency& w);
  explicit SignedLaplacian(Matrix l) : l_(std::move(l)) {}
  Matrix l_;
};

Laplacian laplacian_from_adjacency(const AdjacencyMatrix& w);
SignedLaplacian signed_laplacian(const SignedAdjacency& w);

/// Euclidean projection onto the adjacency set: symmetrize, zero the
/// diagonal, clamp negatives — in that order. Total and idempotent.
AdjacencyMatrix project_adjacency(const Matrix& a);

/// Union-symmetrized k-nearest-neighbor graph with Gaussian weights
/// exp(-d^2 / (2 scale^2)). scale <= 0 selects the mean kNN distance.
/// `points` holds one node per row (coordinates or feature vectors).
AdjacencyMatrix knn_graph(const Matrix& points, int k, double scale = 0.0);

bool is_connected(const Matrix& w);

/// Path graph 1-2-...-n with unit weights (the fixed-modality ablation graph).
AdjacencyMatrix path_graph(int n);

}  // namespace twofold
