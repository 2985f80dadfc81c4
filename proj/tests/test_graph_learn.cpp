#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "test_helpers.hpp"
#include "twofold/graph_learn.hpp"
#include "twofold/signal.hpp"

#include <vector>

using namespace twofold;
using namespace twofold::test;

TEST_CASE("sign surrogate recovers a rank-1 binary polarity exactly") {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 4 + static_cast<int>(rng.uniform_index(6));
    Vector s(m);
    for (int i = 0; i < m; ++i) s(i) = rng.uniform() < 0.5 ? 1.0 : -1.0;
    const Matrix k = s * s.transpose();
    const SignSurrogate c = sign_surrogate(k, 1, 30);
    CHECK((c.c - k).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("sign surrogate diagonal is one and entries stay in [-1,1]") {
  const int m = 6;
  const SignSurrogate c = sign_surrogate(Matrix::Identity(m, m), 1, 30);
  for (int i = 0; i < m; ++i) CHECK(c.c(i, i) == 1.0);
  CHECK(c.c.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);

  Rng rng(2);
  const SignSurrogate random_c = sign_surrogate(random_symmetric(7, rng), 2, 30);
  for (int i = 0; i < 7; ++i) CHECK(random_c.c(i, i) == 1.0);
  CHECK(random_c.c.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  CHECK(is_symmetric(random_c.c, 1e-14));
}

TEST_CASE("sign surrogate separates planted blocks") {
  // K = D_s (ones tile of A) D_s with s = (+,+,+,-,-,-) and A entrywise positive PSD
  Rng rng(3);
  const Matrix g = random_matrix(3, 3, rng);
  Matrix a = g * g.transpose();
  a = a.cwiseAbs();  // Perron-positive block
  Matrix k(6, 6);
  k.block(0, 0, 3, 3) = a;
  k.block(3, 3, 3, 3) = a;
  k.block(0, 3, 3, 3) = -a;
  k.block(3, 0, 3, 3) = -a;
  const SignSurrogate c = sign_surrogate(k, 1, 50);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      const double expected = (i < 3) == (j < 3) ? 1.0 : -1.0;
      CHECK(c.c(i, j) * expected > 0.0);
    }
  }
}

TEST_CASE("sign surrogate determinism and validation") {
  Rng rng(4);
  const Matrix k = random_symmetric(8, rng);
  const SignSurrogate a = sign_surrogate(k, 2, 30);
  const SignSurrogate b = sign_surrogate(k, 2, 30);
  CHECK(a.c == b.c);  // bit-identical

  Matrix bad = k;
  bad(0, 1) += 1.0;
  CHECK_THROWS_AS(sign_surrogate(bad, 2, 30), ValidationError);
  CHECK_THROWS_AS(sign_surrogate(k, 0, 30), ParameterError);
  CHECK_THROWS_AS(sign_surrogate(k, 9, 30), ParameterError);
}

TEST_CASE("kernel modulation: unsigned reduction and diagonal preservation") {
  Rng rng(5);
  const Matrix k = random_symmetric(5, rng);
  CHECK(modulate_kernel(k, Matrix::Ones(5, 5)) == k);
  Vector s(5);
  for (int i = 0; i < 5; ++i) s(i) = rng.uniform() < 0.5 ? 1.0 : -1.0;
  const Matrix modulated = modulate_kernel(k, s * s.transpose());
  for (int i = 0; i < 5; ++i) CHECK(modulated(i, i) == k(i, i));
}

TEST_CASE("trace equivalence under Hadamard product (binary signs)") {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 3 + static_cast<int>(rng.uniform_index(10));  // M <= 12
    const Matrix k = random_symmetric(m, rng, 2.0);
    const Matrix w_m = random_adjacency(m, rng);
    Vector s(m);
    for (int i = 0; i < m; ++i) s(i) = rng.uniform() < 0.5 ? 1.0 : -1.0;
    const Matrix sign = s * s.transpose();

    Matrix l_signed = -(sign.cwiseProduct(w_m));
    l_signed.diagonal() = w_m.rowwise().sum();
    Matrix l_m = -w_m;
    l_m.diagonal() = w_m.rowwise().sum();

    const double lhs = l_signed.cwiseProduct(k).sum();                      // tr(Lbar K)
    const double rhs = l_m.cwiseProduct(modulate_kernel(k, sign)).sum();    // tr(Lm (S o K))
    CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(lhs)));
  }
}

TEST_CASE("degree prox: stationarity limit and closed form") {
  // gamma -> 0+, everything else off: the prox returns v
  CHECK(degree_prox(0.8, 0.0, 1.0, 0.0, 1e-14, 1.0) == doctest::Approx(0.8).epsilon(1e-6));

  // alpha=beta=gamma=sigma=1, v=0, k=0: root of 3d^2 - 1 = 0
  const double d = degree_prox(0.0, 0.0, 1.0, 1.0, 1.0, 1.0);
  CHECK(d == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
  // stationarity of the scalar objective at the root
  const double g_prime = 2.0 * d + 0.0 - 1.0 / d + (d - 0.0);
  CHECK(std::abs(g_prime) <= 1e-10);
}

TEST_CASE("degree prox matches a 1-D golden-section oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const double v = rng.uniform(-3.0, 3.0);
    const double k_diag = rng.uniform(-2.0, 2.0);
    const double alpha = rng.uniform(0.05, 3.0);
    const double beta = rng.uniform(0.05, 3.0);
    const double gamma = rng.uniform(0.05, 3.0);
    const double sigma = rng.uniform(0.1, 3.0);

    const auto objective = [&](double d) {
      return beta * d * d + alpha * k_diag * d - gamma * std::log(d) +
             (d - v) * (d - v) / (2.0 * sigma);
    };
    const double oracle = golden_section_min(objective, 1e-9, 50.0, 300);
    const double closed = degree_prox(v, k_diag, alpha, beta, gamma, sigma);
    CHECK(std::abs(closed - oracle) <= 1e-6);
  }
}

TEST_CASE("pdhg with a zero kernel keeps degrees strictly positive") {
  PdhgConfig cfg;
  cfg.alpha_fit = 1.0;
  cfg.beta_frob = 1.0;
  cfg.gamma_log = 0.5;
  cfg.sigma = 1.0;
  cfg.tau = stable_tau(4, cfg.sigma, cfg.beta_frob);
  cfg.max_iters = 3000;
  cfg.tol = 1e-10;
  const PdhgResult res = pdhg_learn(Matrix::Zero(4, 4), cfg);
  for (int i = 0; i < 4; ++i) CHECK(res.degrees(i) > 0.0);
  const Vector row_sums = res.w.rowwise().sum();
  CHECK((row_sums - res.degrees).norm() <= 1e-3 * res.degrees.norm());
}

TEST_CASE("pdhg reaches the exhaustive grid optimum on 3-node problems") {
  Rng rng(8);
  PdhgConfig cfg;
  cfg.alpha_fit = 1.0;
  cfg.beta_frob = 1.0;
  cfg.gamma_log = 1.0;
  cfg.sigma = 1.0;
  cfg.tau = stable_tau(3, cfg.sigma, cfg.beta_frob);
  cfg.max_iters = 20000;
  cfg.tol = 1e-12;

  for (int instance = 0; instance < 3; ++instance) {
    // kernel from two anticorrelated signals and one independent one
    Matrix x(8, 3);
    for (int i = 0; i < 8; ++i) {
      const double base = rng.gaussian();
      x(i, 0) = base;
      x(i, 1) = -base + 0.1 * rng.gaussian();
      x(i, 2) = rng.gaussian();
    }
    const Matrix k = modality_kernel(x, Matrix::Identity(8, 8)) / 8.0;

    double grid_best = std::numeric_limits<double>::infinity();
    Matrix w(3, 3);
    for (int i1 = 0; i1 <= 300; ++i1)
      for (int i2 = 0; i2 <= 300; ++i2)
        for (int i3 = 0; i3 <= 300; ++i3) {
          w.setZero();
          w(0, 1) = w(1, 0) = 0.01 * i1;
          w(0, 2) = w(2, 0) = 0.01 * i2;
          w(1, 2) = w(2, 1) = 0.01 * i3;
          grid_best = std::min(grid_best,
                               graph_learning_objective(w, k, cfg.alpha_fit, cfg.beta_frob,
                                                        cfg.gamma_log));
        }

    const PdhgResult res = pdhg_learn(k, cfg);
    const double pdhg_value =
        graph_learning_objective(res.w, k, cfg.alpha_fit, cfg.beta_frob, cfg.gamma_log);
    CHECK(pdhg_value <= grid_best + 5e-2);
    CHECK(res.w.maxCoeff() < 2.9);  // the optimum must be interior to the grid box
  }
}

TEST_CASE("pdhg output satisfies the adjacency invariants exactly") {
  Rng rng(9);
  const Matrix k = random_symmetric(6, rng, 2.0);
  PdhgConfig cfg;
  cfg.tau = stable_tau(6, cfg.sigma, cfg.beta_frob);
  cfg.max_iters = 200;
  const PdhgResult res = pdhg_learn(k, cfg);
  CHECK_NOTHROW(AdjacencyMatrix{res.w});
  CHECK((res.laplacian * Vector::Ones(6)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("strong kernel fit ranks edges by the trace-expansion cost") {
  // node-transitive circulant kernels keep the dual pressure uniform, so the
  // learned weights are ordered purely by the fit term of the trace expansion
  Rng rng(10);
  const int m = 9;
  PdhgConfig cfg;
  cfg.alpha_fit = 5.0;
  cfg.beta_frob = 1.0;
  cfg.gamma_log = 12.0;
  cfg.sigma = 1.0;
  cfg.tau = stable_tau(m, cfg.sigma, cfg.beta_frob);
  cfg.max_iters = 20000;
  cfg.tol = 1e-12;

  for (int instance = 0; instance < 5; ++instance) {
    std::vector<double> ring(static_cast<size_t>(m / 2 + 1));
    for (double& v : ring) v = rng.uniform(-0.4, 0.4);
    Matrix k = Matrix::Ones(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        if (i == j) continue;
        const int d = std::min(std::abs(i - j), m - std::abs(i - j));
        k(i, j) += ring[static_cast<size_t>(d)];
      }
    const PdhgResult res = pdhg_learn(k, cfg);

    std::vector<double> weights, negated_cost;
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        weights.push_back(res.w(i, j));
        negated_cost.push_back(-(k(i, i) + k(j, j) - 2.0 * k(i, j)));
      }
    CHECK(spearman(weights, negated_cost) >= 0.9);
  }
}

TEST_CASE("pdhg scaling covariance: only alpha_fit * K matters") {
  Rng rng(11);
  const Matrix k = random_symmetric(5, rng);
  PdhgConfig cfg;
  cfg.alpha_fit = 1.4;
  cfg.tau = stable_tau(5, cfg.sigma, cfg.beta_frob);
  cfg.max_iters = 400;
  const double c = 3.7;
  PdhgConfig scaled = cfg;
  scaled.alpha_fit = cfg.alpha_fit / c;
  const PdhgResult base = pdhg_learn(k, cfg);
  const PdhgResult equiv = pdhg_learn(c * k, scaled);
  CHECK((base.w - equiv.w).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("pdhg determinism") {
  Rng rng(12);
  const Matrix k = random_symmetric(7, rng);
  PdhgConfig cfg;
  cfg.tau = stable_tau(7, cfg.sigma, cfg.beta_frob);
  const PdhgResult a = pdhg_learn(k, cfg);
  const PdhgResult b = pdhg_learn(k, cfg);
  CHECK(a.w == b.w);
}

TEST_CASE("forced unsigned modality learning equals plain pdhg on the kernel") {
  Rng rng(13);
  const Matrix x = random_matrix(7, 5, rng);
  const Matrix l_s = random_connected_laplacian(7, rng);
  PdhgConfig cfg;
  cfg.tau = stable_tau(5, cfg.sigma, cfg.beta_frob);
  SignConfig sign_cfg;
  sign_cfg.enabled = false;
  const SignedModalityResult via_modality = learn_signed_modality(x, l_s, cfg, sign_cfg);
  const PdhgResult direct = pdhg_learn(modality_kernel(x, l_s), cfg);
  CHECK(via_modality.w_m == direct.w);
  CHECK(via_modality.laplacian.matrix() == direct.laplacian);
}

TEST_CASE("planted anti-correlated groups are recovered") {
  Rng rng(14);
  const int n = 20, m = 10;
  Vector base(n);
  for (int i = 0; i < n; ++i) base(i) = rng.gaussian();
  Matrix x(n, m);
  std::vector<int> polarity(m);
  for (int c = 0; c < m; ++c) {
    polarity[c] = c < m / 2 ? 1 : -1;
    x.col(c) = polarity[c] * base;
  }
  PdhgConfig cfg;
  cfg.tau = stable_tau(m, cfg.sigma, cfg.beta_frob);
  const SignedModalityResult res =
      learn_signed_modality(x, Matrix::Identity(n, n) / static_cast<double>(n), cfg, SignConfig{});
  int agree = 0, total = 0;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      ++total;
      if (res.sign.c(i, j) * (polarity[i] * polarity[j]) > 0) ++agree;
    }
  CHECK(static_cast<double>(agree) >= 0.95 * static_cast<double>(total));
}

TEST_CASE("learned signed modality Laplacian is PSD") {
  Rng rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = random_matrix(8, 6, rng);
    const Matrix l_s = random_connected_laplacian(8, rng);
    PdhgConfig cfg;
    cfg.tau = stable_tau(6, cfg.sigma, cfg.beta_frob);
    const SignedModalityResult res = learn_signed_modality(x, l_s, cfg, SignConfig{});
    CHECK(min_eigenvalue(res.laplacian.matrix()) >= -1e-9);
  }
}
