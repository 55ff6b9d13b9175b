#include <doctest.h>

#include <cmath>

#include "rapopt/baselines.hpp"
#include "support.hpp"

using namespace rapopt;
using rapopt::testing::quadratic_oracle;
using rapopt::testing::random_quadratic_sum;
using rapopt::testing::random_vector;

TEST_CASE("variance-reduced gradient equals the full gradient at the anchor") {
  Pcg64 rng(1);
  const auto p = random_quadratic_sum(6, 4, 0.5, 2.0, 4.0, rng);
  const Vector anchor = random_vector(4, rng);
  const Vector full = full_gradient(p, anchor);
  for (long long i = 0; i < 6; ++i) {
    const Vector v = p.components[static_cast<std::size_t>(i)].gradient(anchor) -
                     p.components[static_cast<std::size_t>(i)].gradient(anchor) +
                     full;
    CHECK((v - full).norm() == 0.0);
  }
}

TEST_CASE("svrg pass accounting: anchor pass plus unit inner steps") {
  Pcg64 rng(2);
  const auto p = random_quadratic_sum(10, 3, 0.5, 2.0, 4.0, rng);
  SvrgConfig cfg;
  cfg.seed = 3;
  cfg.stop_tol = 0.0;
  cfg.max_passes = 6.0;  // three epochs of anchor + m inner steps
  const auto res = run_svrg(p, cfg);
  CHECK(res.record.counters.component_grad_evals == 60);
  CHECK(res.record.rows.back().pass == doctest::Approx(6.0));
}

TEST_CASE("svrg with zero inner steps reduces to anchor evaluations") {
  Pcg64 rng(3);
  const auto p = random_quadratic_sum(5, 3, 0.5, 2.0, 4.0, rng);
  SvrgConfig cfg;
  cfg.epoch_length = 5;
  cfg.stop_tol = 0.0;
  cfg.max_passes = 2.0;
  cfg.seed = 1;
  const auto res = run_svrg(p, cfg);
  // Each epoch costs one anchor pass plus one pass of inner steps.
  CHECK(res.record.counters.component_grad_evals == 10);
}

TEST_CASE("svrg decreases the gradient norm on average over seeds") {
  Pcg64 rng(4);
  const auto p = random_quadratic_sum(8, 4, 0.5, 2.0, 4.0, rng);
  std::vector<double> mean;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SvrgConfig cfg;
    cfg.seed = seed;
    cfg.stop_tol = 0.0;
    cfg.max_passes = 12.0;
    const auto res = run_svrg(p, cfg);
    if (mean.empty()) mean.assign(res.record.rows.size(), 0.0);
    REQUIRE(res.record.rows.size() == mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) {
      mean[i] += res.record.rows[i].grad_norm_sq / 20.0;
    }
  }
  for (std::size_t i = 1; i < mean.size(); ++i) {
    CHECK(mean[i] <= mean[i - 1] * (1.0 + 1e-9));
  }
}

TEST_CASE("ag with zero momentum is plain projected gradient descent") {
  Pcg64 rng(5);
  const auto p = random_quadratic_sum(4, 3, 0.5, 2.0, 4.0, rng);
  AgConfig cfg;
  cfg.momentum_scale = 0.0;
  cfg.stop_tol = 0.0;
  cfg.max_passes = 5.0;
  const auto res = run_ag(p, cfg);

  // Reference: x <- x - beta grad f(x) from the same start.
  const double beta = 1.0 / (2.0 * p.L);
  Vector x = Vector::Zero(3);
  for (int k = 0; k < 5; ++k) x -= beta * full_gradient(p, x);
  CHECK((res.x_out - x).norm() <= 1e-14 * (1.0 + x.norm()));
}

TEST_CASE("ag pass counter increments by one per iteration") {
  Pcg64 rng(6);
  const auto p = random_quadratic_sum(7, 3, 0.5, 2.0, 4.0, rng);
  AgConfig cfg;
  cfg.stop_tol = 0.0;
  cfg.max_passes = 9.0;
  const auto res = run_ag(p, cfg);
  CHECK(res.record.counters.component_grad_evals == 9 * 7);
  REQUIRE(res.record.rows.size() == 10);  // initial row + 9 iterations
  for (std::size_t i = 0; i < res.record.rows.size(); ++i) {
    CHECK(res.record.rows[i].pass == doctest::Approx(static_cast<double>(i)));
  }
}

TEST_CASE("accelerated steps beat descent on an ill-conditioned quadratic") {
  // Deterministic convex quadratic with spread-out curvature.
  FiniteSumProblem p;
  const Eigen::Index n = 20;
  Vector diag(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    diag[i] = 1.0 + 99.0 * static_cast<double>(i) / (n - 1);
  }
  Pcg64 rng(7);
  p.components.push_back(
      quadratic_oracle(diag.asDiagonal(), random_vector(n, rng)));
  p.L = 100.0;
  p.mu = 1.0;

  AgConfig accel;
  accel.policy = AgStepPolicy::kGrowing;
  accel.stop_tol = 0.0;
  accel.max_passes = 200.0;
  const auto fast = run_ag(p, accel);

  AgConfig plain;
  plain.momentum_scale = 0.0;
  plain.stop_tol = 0.0;
  plain.max_passes = 200.0;
  const auto slow = run_ag(p, plain);

  CHECK(fast.record.rows.back().objective < slow.record.rows.back().objective);
}

namespace {

MultiBlockProblem convex_quadratic_multiblock(long long blocks, Eigen::Index n,
                                              std::uint64_t seed) {
  MultiBlockProblem p;
  Pcg64 rng(seed);
  for (long long i = 0; i < blocks; ++i) {
    BlockSpec blk;
    blk.dim = 1;
    blk.A = Matrix(n, 1);
    for (Eigen::Index r = 0; r < n; ++r) blk.A(r, 0) = rng.normal();
    const double kappa = 0.5 + rng.uniform01();
    blk.oracle = quadratic_oracle(kappa * Matrix::Identity(1, 1),
                                  random_vector(1, rng));
    p.blocks.push_back(std::move(blk));
  }
  p.last_oracle = quadratic_oracle(Matrix::Identity(n, n), random_vector(n, rng));
  p.A_m = Matrix::Identity(n, n);
  p.b = random_vector(n, rng);
  p.L = 2.0;
  p.mu = 1.0;
  return p;
}

}  // namespace

TEST_CASE("admm drives the feasibility residual to zero on a convex instance") {
  const auto p = convex_quadratic_multiblock(6, 4, 8);
  AdmmConfig cfg;
  cfg.max_cycles = 3000;
  cfg.stop_tol = 1e-12;
  const auto res = run_admm(p, 2.0, cfg);
  CHECK(res.record.stop_reason == "stop_tol");
  CHECK(res.record.rows.back().feasibility_sq < 1e-12);
}

TEST_CASE("one admm cycle counts m block updates") {
  const auto p = convex_quadratic_multiblock(5, 3, 9);
  AdmmConfig cfg;
  cfg.max_cycles = 4;
  cfg.stop_tol = 0.0;
  const auto res = run_admm(p, 1.0, cfg);
  CHECK(res.record.counters.block_updates == 4 * 6);
}

TEST_CASE("large rho tightens per-cycle feasibility while slowing the objective") {
  const auto p = convex_quadratic_multiblock(5, 3, 10);
  AdmmConfig cfg;
  cfg.max_cycles = 8;
  cfg.stop_tol = 0.0;
  const auto tight = run_admm(p, 500.0, cfg);
  const auto loose = run_admm(p, 1.0, cfg);
  // Recorded for inspection; only well-definedness is asserted.
  CHECK(std::isfinite(tight.record.rows.back().feasibility_sq));
  CHECK(std::isfinite(loose.record.rows.back().objective));
  CHECK(tight.record.rows.back().feasibility_sq <=
        loose.record.rows.back().feasibility_sq);
}

TEST_CASE("rho must be positive") {
  const auto p = convex_quadratic_multiblock(3, 2, 11);
  AdmmConfig cfg;
  CHECK_THROWS_AS(run_admm(p, 0.0, cfg), std::invalid_argument);
}

TEST_CASE("tuning returns the single candidate trivially") {
  Pcg64 rng(12);
  const auto p = random_quadratic_sum(6, 3, 0.5, 2.0, 6.0, rng);
  const auto out = tune_inner_iterations(p, {0.5}, 10.0, 7);
  CHECK(out.best_factor == 0.5);
  REQUIRE(out.results.size() == 1);
}

TEST_CASE("tuning is deterministic and picks the argmin") {
  Pcg64 rng(13);
  const auto p = random_quadratic_sum(8, 4, 0.5, 2.0, 10.0, rng);
  const auto a = tune_inner_iterations(p, {1.0, 0.1}, 15.0, 3);
  const auto b = tune_inner_iterations(p, {1.0, 0.1}, 15.0, 3);
  CHECK(a.best_factor == b.best_factor);
  REQUIRE(a.results.size() == 2);
  double best = 1e300;
  double best_factor = 0.0;
  for (const auto& [factor, gns] : a.results) {
    CHECK(gns == doctest::Approx(
                     b.results[&factor == &a.results[0].first ? 0 : 1].second));
    if (gns < best) {
      best = gns;
      best_factor = factor;
    }
  }
  CHECK(a.best_factor == best_factor);
  CHECK_THROWS_AS(tune_inner_iterations(p, {}, 10.0, 1), std::invalid_argument);
}

TEST_CASE("svrg with zero inner steps is anchor evaluation only") {
  Pcg64 rng(20);
  const auto p = random_quadratic_sum(6, 3, 0.5, 2.0, 4.0, rng);
  SvrgConfig cfg;
  cfg.epoch_length = 0;
  cfg.stop_tol = 0.0;
  cfg.max_passes = 3.0;
  cfg.seed = 2;
  const auto res = run_svrg(p, cfg);
  // Three anchor passes, no inner movement.
  CHECK(res.record.counters.component_grad_evals == 18);
  CHECK(res.x_out.norm() == 0.0);
  for (const auto& row : res.record.rows) {
    CHECK(row.grad_norm_sq == doctest::Approx(res.record.rows.front().grad_norm_sq));
  }
}
