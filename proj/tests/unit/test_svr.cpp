#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "gaborikl/errors.hpp"
#include "gaborikl/gabor_kernels.hpp"
#include "gaborikl/svr.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace gaborikl;
using std::numbers::pi;

namespace {

struct Instance {
  Eigen::MatrixXd gram;
  std::vector<double> y;
  Eigen::VectorXd yv;
};

Instance random_instance(std::mt19937_64& rng, int n, double spread = 8.0) {
  std::uniform_real_distribution<double> om(0.2, 2.0), th(0, pi), ty(-1.0, 1.0);
  const auto pts = testing::random_points(rng, n, 0, spread);
  Instance in;
  in.gram = gram(GaborParams::make(om(rng), th(rng)), pts).values;
  in.yv.resize(n);
  for (int i = 0; i < n; ++i) {
    in.y.push_back(ty(rng));
    in.yv[i] = in.y.back();
  }
  return in;
}

// Nested-grid search over (d1, d2) with d3 = -d1 - d2; the objective is concave so zooming on
// the best node converges to the optimum.
double three_point_grid(const Instance& in, double eps, double c) {
  double c1 = 0.0, c2 = 0.0, half = c, best = -std::numeric_limits<double>::infinity();
  for (int level = 0; level < 8; ++level) {
    double b1 = c1, b2 = c2;
    const int steps = 100;
    for (int i = -steps; i <= steps; ++i) {
      for (int j = -steps; j <= steps; ++j) {
        const double d1 = std::clamp(c1 + half * i / steps, -c, c);
        const double d2 = std::clamp(c2 + half * j / steps, -c, c);
        const double d3 = -d1 - d2;
        if (std::fabs(d3) > c) continue;
        const Eigen::Vector3d d(d1, d2, d3);
        const double v = testing::svr_dual_value(in.gram, in.yv, eps, d);
        if (v > best) {
          best = v;
          b1 = d1;
          b2 = d2;
        }
      }
    }
    c1 = b1;
    c2 = b2;
    half /= 10.0;
  }
  return best;
}

}  // namespace

TEST_SUITE("svr") {

TEST_CASE("constant targets give the zero solution") {
  std::mt19937_64 rng(1);
  auto in = random_instance(rng, 6);
  const std::vector<double> y(6, 0.37);
  const auto sol = solve_svr(in.gram, y, SvrConfig{});
  CHECK(sol.dual_coef.isZero());
  CHECK(sol.support.empty());
  CHECK(sol.bias == doctest::Approx(0.37));
  CHECK(sol.dual_objective == 0.0);
}

TEST_CASE("targets inside the tube give the zero solution") {
  std::mt19937_64 rng(2);
  auto in = random_instance(rng, 8);
  std::uniform_real_distribution<double> u(-0.02, 0.02);
  std::vector<double> y(8);
  for (auto& v : y) v = u(rng);
  SvrConfig cfg;
  cfg.epsilon = 0.05;
  const auto sol = solve_svr(in.gram, y, cfg);
  CHECK(sol.dual_coef.isZero());
  CHECK(std::fabs(sol.bias) <= 0.05);
}

TEST_CASE("single-variable dual objective by calculus") {
  const Eigen::MatrixXd k = Eigen::MatrixXd::Ones(1, 1);
  SvrConfig cfg;
  cfg.epsilon = 0.1;
  cfg.C = 0.5;
  for (double y1 : {0.3, -0.45, 2.0, -3.0}) {
    const std::vector<double> y{y1};
    const double sign = y1 > 0 ? 1.0 : -1.0;
    const double t_star = std::clamp(y1 - cfg.epsilon * sign, -cfg.C, cfg.C);
    const double expect = y1 * t_star - cfg.epsilon * std::fabs(t_star) - 0.5 * t_star * t_star;
    Eigen::VectorXd d(1);
    d[0] = t_star;
    CHECK(dual_objective_of(d, k, y, cfg, false) == doctest::Approx(expect));
    // No other feasible value does better.
    for (double t = -cfg.C; t <= cfg.C; t += 0.001) {
      d[0] = t;
      CHECK(dual_objective_of(d, k, y, cfg, false) <= expect + 1e-12);
    }
  }
}

TEST_CASE("dual objective rejects infeasible points") {
  const Eigen::MatrixXd k = Eigen::MatrixXd::Identity(2, 2);
  const std::vector<double> y{0.1, 0.2};
  SvrConfig cfg;
  cfg.C = 1.0;
  CHECK(dual_objective_of(Eigen::VectorXd::Zero(2), k, y, cfg) == 0.0);
  CHECK_THROWS_AS(dual_objective_of(Eigen::Vector2d(1.5, -1.5), k, y, cfg), DomainError);
  CHECK_THROWS_AS(dual_objective_of(Eigen::Vector2d(0.5, 0.2), k, y, cfg), DomainError);
}

TEST_CASE("two points match a dense line search") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    auto in = random_instance(rng, 2);
    SvrConfig cfg;
    cfg.C = 2.0;
    const auto sol = solve_svr(in.gram, in.y, cfg);
    double best = -1e300;
    for (int s = -200000; s <= 200000; ++s) {
      const double v = cfg.C * s / 200000.0;
      best = std::max(best, testing::svr_dual_value(in.gram, in.yv, cfg.epsilon, Eigen::Vector2d(v, -v)));
    }
    CHECK(sol.dual_objective == doctest::Approx(best).epsilon(1e-3));
    CHECK(sol.dual_objective >= best - 1e-12);
  }
}

TEST_CASE("three points match a nested grid search") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    auto in = random_instance(rng, 3);
    SvrConfig cfg;
    cfg.C = 10.0;
    cfg.epsilon = 0.05;
    const auto sol = solve_svr(in.gram, in.y, cfg);
    const double grid = three_point_grid(in, cfg.epsilon, cfg.C);
    CHECK(std::fabs(sol.dual_objective - grid) <= 1e-3 * std::max(std::fabs(grid), 1e-9));
  }
}

TEST_CASE("small problems match face enumeration") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> size(2, 4);
  for (int t = 0; t < 60; ++t) {
    auto in = random_instance(rng, size(rng), 4.0);
    SvrConfig cfg;
    cfg.C = (t % 3 == 0) ? 0.2 : 10.0;
    cfg.epsilon = (t % 2 == 0) ? 0.0 : 0.1;
    const auto sol = solve_svr(in.gram, in.y, cfg);
    const double exact = testing::svr_face_enumeration(in.gram, in.yv, cfg.epsilon, cfg.C);
    CHECK(std::fabs(sol.dual_objective - exact) <= 1e-3 * std::fabs(exact) + 1e-9);
  }
}

TEST_CASE("returned solutions are feasible and optimal") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 8; ++t) {
    auto in = random_instance(rng, 60, 12.0);
    SvrConfig cfg;
    cfg.C = (t % 2 == 0) ? 0.3 : 10.0;
    const auto sol = solve_svr(in.gram, in.y, cfg);
    const double n = static_cast<double>(in.y.size());
    CHECK(std::fabs(sol.dual_coef.sum()) <= 1e-8 * n * cfg.C);
    CHECK(sol.dual_coef.cwiseAbs().maxCoeff() <= cfg.C);
    CHECK(testing::svr_kkt_gap(in.gram, in.yv, cfg.epsilon, cfg.C, sol.dual_coef) <= cfg.kkt_tol);
    CHECK(svr_kkt_residual(sol, in.gram, in.y, cfg) <= cfg.kkt_tol);
    CHECK(sol.dual_objective ==
          doctest::Approx(testing::svr_dual_value(in.gram, in.yv, cfg.epsilon, sol.dual_coef)));

    // Random balanced feasible points never beat the solver.
    std::uniform_real_distribution<double> u(-cfg.C, cfg.C);
    for (int r = 0; r < 50; ++r) {
      Eigen::VectorXd d(in.yv.size());
      for (Eigen::Index i = 0; i < d.size(); i += 2) {
        const double v = u(rng);
        d[i] = v;
        if (i + 1 < d.size()) d[i + 1] = -v; else d[i] = 0.0;
      }
      CHECK(dual_objective_of(d, in.gram, in.y, cfg) <= sol.dual_objective + cfg.kkt_tol * n);
    }
  }
}

TEST_CASE("support lists exactly the nonzero coefficients") {
  std::mt19937_64 rng(7);
  auto in = random_instance(rng, 30);
  const auto sol = solve_svr(in.gram, in.y, SvrConfig{});
  std::vector<std::size_t> nz;
  for (Eigen::Index i = 0; i < sol.dual_coef.size(); ++i)
    if (sol.dual_coef[i] != 0.0) nz.push_back(static_cast<std::size_t>(i));
  CHECK(sol.support == nz);
}

TEST_CASE("enlarging C never lowers the optimum") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 5; ++t) {
    auto in = random_instance(rng, 25);
    double prev = -1.0;
    for (double c : {0.01, 0.1, 1.0, 10.0, 100.0}) {
      SvrConfig cfg;
      cfg.C = c;
      const double obj = solve_svr(in.gram, in.y, cfg).dual_objective;
      CHECK(obj >= prev - 1e-9);
      prev = obj;
    }
  }
}

TEST_CASE("errors and determinism") {
  std::mt19937_64 rng(9);
  auto in = random_instance(rng, 20);
  auto bad = in.y;
  bad[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(solve_svr(in.gram, bad, SvrConfig{}), DomainError);
  CHECK_THROWS_AS(solve_svr(in.gram, std::vector<double>(5, 0.0), SvrConfig{}), DomainError);

  SvrConfig bad_cfg;
  bad_cfg.C = -1.0;
  CHECK_THROWS_AS(bad_cfg.validated(), DomainError);
  SvrConfig inf_cfg;
  inf_cfg.C = std::numeric_limits<double>::infinity();
  CHECK(inf_cfg.validated().C == kInfiniteC);

  const auto a = solve_svr(in.gram, in.y, SvrConfig{});
  const auto b = solve_svr(in.gram, in.y, SvrConfig{});
  CHECK(a.dual_coef == b.dual_coef);
  CHECK(a.bias == b.bias);

  SvrConfig tiny;
  tiny.max_iter = 1;
  try {
    solve_svr(in.gram, in.y, tiny);
    FAIL("expected a convergence error");
  } catch (const ConvergenceError<SvrSolution>& e) {
    CHECK(std::fabs(e.best().dual_coef.sum()) <= 1e-12);
    CHECK(e.best().dual_objective >= 0.0);
  }
}

TEST_CASE("warm start reaches the same optimum") {
  std::mt19937_64 rng(10);
  auto in = random_instance(rng, 40);
  const auto cold = solve_svr(in.gram, in.y, SvrConfig{});
  const auto warm = solve_svr(in.gram, in.y, SvrConfig{}, cold.dual_coef);
  CHECK(warm.dual_objective == doctest::Approx(cold.dual_objective).epsilon(1e-9));
  CHECK(warm.iterations <= cold.iterations);
}

TEST_CASE("prediction") {
  std::mt19937_64 rng(11);
  const auto pts = testing::random_points(rng, 5, 0, 6);
  KernelMixture mix;
  mix.components.push_back({0.6, GaborParams::make(1.0, 0.5)});
  mix.components.push_back({0.3, GaborParams::make(0.4, 2.5)});
  SvrSolution zero{Eigen::VectorXd::Zero(5), 0.42, {}, 0.0, 0, 0.0};
  CHECK(predict(zero, mix, pts, {1.5, 2.5}) == 0.42);

  SvrSolution s{Eigen::VectorXd::Zero(5), 0.1, {}, 0.0, 0, 0.0};
  s.dual_coef << 0.5, -0.25, 0.0, 1.0, -1.25;
  const PixelCoord q{2.2, 3.1};
  double expect = 0.1;
  for (int i = 0; i < 5; ++i) {
    for (const auto& c : mix.components)
      expect += s.dual_coef[i] * c.weight * eval_gabor(c.params, pts[static_cast<std::size_t>(i)], q);
  }
  CHECK(predict(s, mix, pts, q) == doctest::Approx(expect).epsilon(1e-14));
  CHECK_THROWS_AS(predict(s, mix, std::span(pts).first(3), q), DomainError);
}

}
