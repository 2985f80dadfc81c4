#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "test_helpers.hpp"
#include "twofold/graph.hpp"

using namespace twofold;
using namespace twofold::test;

TEST_CASE("laplacian of a two-node unit edge") {
  Matrix w(2, 2);
  w << 0, 1, 1, 0;
  const Matrix l = laplacian_from_adjacency(AdjacencyMatrix(w)).matrix();
  Matrix expected(2, 2);
  expected << 1, -1, -1, 1;
  CHECK((l - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("laplacian of the empty graph is zero") {
  const Matrix l = laplacian_from_adjacency(AdjacencyMatrix(Matrix::Zero(3, 3))).matrix();
  CHECK(l.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("laplacian is PSD with zero row sums") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 5;
    const Matrix w = random_adjacency(n, rng, 10.0);
    const Matrix l = laplacian_from_adjacency(AdjacencyMatrix(w)).matrix();
    CHECK(min_eigenvalue(l) >= -1e-10);
    CHECK((l * Vector::Ones(n)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("adjacency validation names the violated invariant") {
  Matrix asym(2, 2);
  asym << 0, 1, 2, 0;
  CHECK_THROWS_WITH_AS(AdjacencyMatrix{asym}, doctest::Contains("symmetric"), ValidationError);

  Matrix negative(2, 2);
  negative << 0, -1, -1, 0;
  CHECK_THROWS_WITH_AS(AdjacencyMatrix{negative}, doctest::Contains("negative"), ValidationError);

  Matrix loop(2, 2);
  loop << 1, 1, 1, 0;
  CHECK_THROWS_WITH_AS(AdjacencyMatrix{loop}, doctest::Contains("hollow"), ValidationError);
}

TEST_CASE("signed laplacian of a single negative edge") {
  Matrix w(2, 2);
  w << 0, -1, -1, 0;
  const Matrix l = signed_laplacian(SignedAdjacency(w)).matrix();
  Matrix expected(2, 2);
  expected << 1, 1, 1, 1;
  CHECK((l - expected).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(l);
  CHECK(es.eigenvalues()(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(es.eigenvalues()(1) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("signed laplacian reduces to the unsigned one on nonnegative weights") {
  Rng rng(11);
  const Matrix w = random_adjacency(5, rng);
  const Matrix unsigned_l = laplacian_from_adjacency(AdjacencyMatrix(w)).matrix();
  const Matrix signed_l = signed_laplacian(SignedAdjacency(w)).matrix();
  CHECK(signed_l == unsigned_l);  // bit-for-bit
}

TEST_CASE("signed laplacian is PSD") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix w = random_signed_adjacency(6, rng);
    const Matrix l = signed_laplacian(SignedAdjacency(w)).matrix();
    CHECK(min_eigenvalue(l) >= -1e-10);
    for (int k = 0; k < 5; ++k) {
      Vector x(6);
      for (int i = 0; i < 6; ++i) x(i) = rng.gaussian();
      x.normalize();
      CHECK(x.dot(l * x) >= -1e-10);
    }
  }
  Matrix asym(2, 2);
  asym << 0, 1, -1, 0;
  CHECK_THROWS_AS(SignedAdjacency{asym}, ValidationError);
}

TEST_CASE("project_adjacency on hand-worked example") {
  Matrix a(2, 2);
  a << 5, -2, 4, 3;
  const Matrix w = project_adjacency(a).matrix();
  Matrix expected(2, 2);
  expected << 0, 1, 1, 0;
  CHECK((w - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("project_adjacency leaves feasible points unchanged and is idempotent") {
  Rng rng(17);
  const Matrix feasible = random_adjacency(4, rng);
  CHECK(project_adjacency(feasible).matrix() == feasible);

  CHECK(project_adjacency(-Matrix::Identity(3, 3)).matrix().cwiseAbs().maxCoeff() == 0.0);

  for (int trial = 0; trial < 100; ++trial) {
    const Matrix a = random_matrix(5, 5, rng, 3.0);
    const Matrix once = project_adjacency(a).matrix();
    const Matrix twice = project_adjacency(once).matrix();
    CHECK(once == twice);  // exact idempotence
  }
}

TEST_CASE("knn graph of three collinear points") {
  Matrix pts(3, 1);
  pts << 0.0, 1.0, 2.0;
  const double scale = 0.7;
  const Matrix w = knn_graph(pts, 1, scale).matrix();
  const double expected = std::exp(-1.0 / (2.0 * scale * scale));
  // middle point is selected by both ends; union symmetrization keeps both edges
  CHECK(w(0, 1) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(w(1, 2) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(w(0, 2) == 0.0);
}

TEST_CASE("knn graph of identical points has unit weights") {
  const Matrix pts = Matrix::Zero(4, 2);
  const Matrix w = knn_graph(pts, 1).matrix();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (w(i, j) != 0.0) CHECK(w(i, j) == 1.0);
  CHECK(w.sum() > 0.0);
}

TEST_CASE("union symmetrization gives every node degree at least k") {
  Rng rng(23);
  Matrix pts(50, 2);
  for (int i = 0; i < 50; ++i) {
    pts(i, 0) = rng.uniform();
    pts(i, 1) = rng.uniform();
  }
  const Matrix w = knn_graph(pts, 6).matrix();
  for (int i = 0; i < 50; ++i) {
    int degree = 0;
    for (int j = 0; j < 50; ++j)
      if (w(i, j) > 0.0) ++degree;
    CHECK(degree >= 6);
  }
}

TEST_CASE("knn graph rejects k >= n") {
  const Matrix pts = Matrix::Zero(3, 2);
  CHECK_THROWS_AS(knn_graph(pts, 3), ParameterError);
  CHECK_THROWS_AS(knn_graph(pts, 0), ParameterError);
}

TEST_CASE("path graph and connectivity") {
  const Matrix w = path_graph(4).matrix();
  CHECK(w(0, 1) == 1.0);
  CHECK(w(2, 3) == 1.0);
  CHECK(w(0, 2) == 0.0);
  CHECK(is_connected(w));
  Matrix disconnected = Matrix::Zero(3, 3);
  disconnected(0, 1) = disconnected(1, 0) = 1.0;
  CHECK_FALSE(is_connected(disconnected));
}
