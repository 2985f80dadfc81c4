#include "twofold/graph.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace twofold {

namespace {

void check_square(const Matrix& w, const char* type_name) {
  if (w.rows() != w.cols()) {
    throw ValidationError(std::string(type_name) + ": matrix must be square, got " +
                          std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
  }
}

void check_symmetric_hollow(const Matrix& w, const char* type_name) {
  check_square(w, type_name);
  const auto n = w.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w(i, i) != 0.0) {
      throw ValidationError(std::string(type_name) + ": not hollow, diagonal entry (" +
                            std::to_string(i) + "," + std::to_string(i) + ") is nonzero");
    }
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (w(i, j) != w(j, i)) {
        throw ValidationError(std::string(type_name) + ": not symmetric at (" +
                              std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
}

}  // namespace

AdjacencyMatrix::AdjacencyMatrix(Matrix w) : w_(std::move(w)) {
  check_symmetric_hollow(w_, "AdjacencyMatrix");
  if (w_.size() > 0 && w_.minCoeff() < 0.0) {
    throw ValidationError("AdjacencyMatrix: negative weight present");
  }
}

SignedAdjacency::SignedAdjacency(Matrix w) : w_(std::move(w)) {
  check_symmetric_hollow(w_, "SignedAdjacency");
}

Laplacian laplacian_from_adjacency(const AdjacencyMatrix& w) {
  const Matrix& a = w.matrix();
  Matrix l = -a;
  l.diagonal() = a.rowwise().sum();
  return Laplacian(std::move(l));
}

SignedLaplacian signed_laplacian(const SignedAdjacency& w) {
  const Matrix& a = w.matrix();
  Matrix l = -a;
  l.diagonal() = a.cwiseAbs().rowwise().sum();
  return SignedLaplacian(std::move(l));
}

SignedLaplacian SignedLaplacian::from_magnitude_and_sign(const Matrix& w_mag, const Matrix& sign) {
  require_same_shape(w_mag, sign, "SignedLaplacian::from_magnitude_and_sign");
  Matrix l = -(sign.cwiseProduct(w_mag));
  l.diagonal() = w_mag.rowwise().sum();
  return SignedLaplacian(std::move(l));
}

AdjacencyMatrix project_adjacency(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw ValidationError("project_adjacency: matrix must be square");
  }
  Matrix w = 0.5 * (a + a.transpose());
  w.diagonal().setZero();
  w = w.cwiseMax(0.0);
  return AdjacencyMatrix::unchecked(std::move(w));
}

AdjacencyMatrix knn_graph(const Matrix& points, int k, double scale) {
  const int n = static_cast<int>(points.rows());
  if (k < 1) throw ParameterError("knn_graph: k must be >= 1, got " + std::to_string(k));
  if (k >= n) {
    throw ParameterError("knn_graph: k (" + std::to_string(k) + ") must be < node count (" +
                         std::to_string(n) + ")");
  }

  // Brute-force squared distances; target sizes are a few hundred nodes.
  Matrix d2(n, n);
  for (int i = 0; i < n; ++i) {
    d2(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double d = (points.row(i) - points.row(j)).squaredNorm();
      d2(i, j) = d;
      d2(j, i) = d;
    }
  }

  // Directed kNN selection, ties broken by index so results are deterministic.
  std::vector<std::vector<int>> neighbors(n);
  std::vector<int> order(n);
  double distance_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    order.clear();
    for (int j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
      return d2(i, a) != d2(i, b) ? d2(i, a) < d2(i, b) : a < b;
    });
    neighbors[i].assign(order.begin(), order.begin() + k);
    for (int j : neighbors[i]) distance_sum += std::sqrt(d2(i, j));
  }

  if (scale <= 0.0) scale = distance_sum / (static_cast<double>(n) * k);
  if (scale <= 0.0) scale = 1.0;  // all points identical; weights become 1

  Matrix w = Matrix::Zero(n, n);
  const double inv = 1.0 / (2.0 * scale * scale);
  for (int i = 0; i < n; ++i) {
    for (int j : neighbors[i]) {
      const double weight = std::exp(-d2(i, j) * inv);
      w(i, j) = weight;
      w(j, i) = weight;  // union symmetrization: edge kept if either side selects it
    }
  }
  return AdjacencyMatrix::unchecked(std::move(w));
}

bool is_connected(const Matrix& w) {
  const int n = static_cast<int>(w.rows());
  if (n == 0) return true;
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    for (int j = 0; j < n; ++j) {
      if (!seen[j] && w(i, j) > 0.0) {
        seen[j] = 1;
        ++count;
        stack.push_back(j);
      }
    }
  }
  return count == n;
}

AdjacencyMatrix path_graph(int n) {
  if (n < 1) throw ParameterError("path_graph: need at least one node");
  Matrix w = Matrix::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    w(i, i + 1) = 1.0;
    w(i + 1, i) = 1.0;
  }
  return AdjacencyMatrix::unchecked(std::move(w));
}

}  // namespace twofold
