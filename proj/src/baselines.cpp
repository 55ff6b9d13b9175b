#include "rapopt/baselines.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "rapopt/rapdual.hpp"

namespace rapopt {

namespace {

std::int64_t elapsed_ms(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

BaselineResult run_svrg(const FiniteSumProblem& p, const SvrgConfig& cfg) {
  p.validate();
  const long long m = p.m();
  const double step =
      cfg.step > 0.0
          ? cfg.step
          : 1.0 / (3.0 * p.L * std::pow(static_cast<double>(m), 2.0 / 3.0));
  const long long epoch = cfg.epoch_length >= 0 ? cfg.epoch_length : m;

  Pcg64 rng(cfg.seed);
  BaselineResult res;
  RunRecord& rec = res.record;
  rec.seed = cfg.seed;
  rec.config = {{"method", "svrg"},
                {"step", step},
                {"epoch_length", epoch},
                {"seed", cfg.seed},
                {"stop_tol", cfg.stop_tol},
                {"max_passes", cfg.max_passes}};

  Vector x = cfg.x0.size() > 0 ? cfg.x0 : Vector::Zero(p.dimension());
  x = p.set.project(x);

  const auto start = std::chrono::steady_clock::now();
  const double pass_denom = static_cast<double>(m);
  const auto record_row = [&](const Vector& z) {
    TrajectoryRow row;
    row.pass = static_cast<double>(rec.counters.component_grad_evals) / pass_denom;
    row.objective = full_objective(p, z, &rec.metric_counters);
    row.grad_norm_sq = full_gradient(p, z, &rec.metric_counters).squaredNorm();
    row.wall_ms = elapsed_ms(start);
    rec.rows.push_back(row);
    return row.grad_norm_sq;
  };

  rec.stop_reason = "max_passes";
  std::vector<Vector> anchor_grads(static_cast<std::size_t>(m));
  for (;;) {
    if (record_row(x) < cfg.stop_tol && cfg.stop_tol > 0.0) {
      rec.stop_reason = "stop_tol";
      break;
    }
    if (static_cast<double>(rec.counters.component_grad_evals) + m >
        cfg.max_passes * pass_denom) {
      break;
    }
    // Anchor pass: cache every component gradient once.
    const Vector anchor = x;
    Vector full = Vector::Zero(x.size());
    for (long long i = 0; i < m; ++i) {
      anchor_grads[static_cast<std::size_t>(i)] =
          p.components[static_cast<std::size_t>(i)].gradient(anchor);
      full += anchor_grads[static_cast<std::size_t>(i)];
    }
    full /= static_cast<double>(m);
    rec.counters.component_grad_evals += m;

    for (long long t = 0; t < epoch; ++t) {
      if (static_cast<double>(rec.counters.component_grad_evals) + 1 >
          cfg.max_passes * pass_denom) {
        break;
      }
      const auto i = static_cast<std::size_t>(
          rng.bounded(static_cast<std::uint64_t>(m)));
      const Vector v = p.components[i].gradient(x) - anchor_grads[i] + full;
      rec.counters.component_grad_evals += 1;
      x = p.set.project(x - step * v);
    }
  }
  res.x_out = x;
  return res;
}

BaselineResult run_ag(const FiniteSumProblem& p, const AgConfig& cfg) {
  p.validate();
  const long long m = p.m();
  const double beta = 1.0 / (2.0 * p.L);

  BaselineResult res;
  RunRecord& rec = res.record;
  rec.config = {{"method", "ag"},
                {"beta", beta},
                {"policy", cfg.policy == AgStepPolicy::kBracket ? "bracket" : "growing"},
                {"momentum_scale", cfg.momentum_scale},
                {"stop_tol", cfg.stop_tol},
                {"max_passes", cfg.max_passes}};

  Vector x = cfg.x0.size() > 0 ? cfg.x0 : Vector::Zero(p.dimension());
  x = p.set.project(x);
  Vector x_ag = x;

  const auto start = std::chrono::steady_clock::now();
  const double pass_denom = static_cast<double>(m);
  const auto record_row = [&](const Vector& z) {
    TrajectoryRow row;
    row.pass = static_cast<double>(rec.counters.component_grad_evals) / pass_denom;
    row.objective = full_objective(p, z, &rec.metric_counters);
    row.grad_norm_sq = full_gradient(p, z, &rec.metric_counters).squaredNorm();
    row.wall_ms = elapsed_ms(start);
    rec.rows.push_back(row);
    return row.grad_norm_sq;
  };

  rec.stop_reason = "max_passes";
  for (long long k = 1;; ++k) {
    if (record_row(x_ag) < cfg.stop_tol && cfg.stop_tol > 0.0) {
      rec.stop_reason = "stop_tol";
      break;
    }
    if (static_cast<double>(rec.counters.component_grad_evals) + m >
        cfg.max_passes * pass_denom) {
      break;
    }
    const double alpha =
        cfg.momentum_scale * 2.0 / (static_cast<double>(k) + 1.0);
    const double lambda = cfg.policy == AgStepPolicy::kBracket
                              ? (1.0 + alpha / 4.0) * beta
                              : static_cast<double>(k) * beta / 2.0;
    const Vector x_md = (1.0 - alpha) * x_ag + alpha * x;
    const Vector g = full_gradient(p, x_md, &rec.counters);
    x = p.set.project(x - lambda * g);
    x_ag = p.set.project(x_md - beta * g);
  }
  res.x_out = x_ag;
  return res;
}

AdmmResult run_admm(const MultiBlockProblem& p, double rho,
                    const AdmmConfig& cfg) {
  return run_admm(reformulate(p), rho, cfg);
}

AdmmResult run_admm(const ReformulatedProblem& rp, double rho,
                    const AdmmConfig& cfg) {
  const MultiBlockProblem& p = rp.problem;
  p.validate();
  if (!(rho > 0.0)) throw std::invalid_argument("run_admm: rho must be > 0");
  const long long blocks = p.m() - 1;

  AdmmResult res;
  RunRecord& rec = res.record;
  rec.seed = cfg.seed;
  rec.config = {{"method", "admm"},
                {"rho", rho},
                {"max_cycles", cfg.max_cycles},
                {"note", "cyclic proximal splitting on the reformulated constraint"}};

  std::vector<Vector> x(static_cast<std::size_t>(blocks));
  std::vector<double> linearization_weight(static_cast<std::size_t>(blocks));
  for (long long i = 0; i < blocks; ++i) {
    const auto& blk = p.blocks[static_cast<std::size_t>(i)];
    x[static_cast<std::size_t>(i)] = blk.set.project(Vector::Zero(blk.dim));
    const double norm = spectral_norm(rp.A[static_cast<std::size_t>(i)]);
    linearization_weight[static_cast<std::size_t>(i)] =
        std::max(rho * norm * norm, 1e-12);
  }
  Vector xm = rp.bvec - rp.apply(x);
  Vector lambda = Vector::Zero(p.n());

  // Ersatz prox centers make the stored block prox (which targets
  // psi_i = f_i + mu||.-c||^2) usable here with a zero shift.
  BlockProxFactory factory =
      p.block_prox ? p.block_prox : generic_block_prox_factory(p);

  const auto start = std::chrono::steady_clock::now();
  const double pass_denom = static_cast<double>(blocks);
  const auto record_row = [&]() {
    double objective = p.last_oracle.value(xm);
    for (long long i = 0; i < blocks; ++i) {
      objective += p.blocks[static_cast<std::size_t>(i)].oracle.value(
          x[static_cast<std::size_t>(i)]);
    }
    const StationarityReport kkt = multiblock_kkt(rp, x, xm);
    TrajectoryRow row;
    row.pass = static_cast<double>(rec.counters.block_updates) / pass_denom;
    row.objective = objective;
    row.grad_norm_sq = kkt.ncone_dist_sq;
    row.feasibility_sq = *kkt.feasibility_sq;
    row.wall_ms = elapsed_ms(start);
    rec.rows.push_back(row);
    return row.feasibility_sq;
  };
  record_row();

  // The prox shift is zero here (mu = 0), so the centers it captures are
  // irrelevant; build it once.
  const BlockProx prox = factory(x, 0.0);
  Vector ax = rp.apply(x);

  // argmin f_m(z) + <lambda, z> + (rho/2)||z - target||^2 by spectral
  // gradient steps; strongly convex for any rho above the curvature bound.
  const auto solve_last_block = [&](const Vector& target) {
    const auto grad = [&](const Vector& z) {
      return (p.last_oracle.gradient(z) + lambda + rho * (z - target)).eval();
    };
    Vector z = target;
    double step_len = 1.0 / (p.L + rho);
    Vector g = grad(z);
    for (int it = 0; it < 200000; ++it) {
      if (g.norm() <= 1e-11 * (1.0 + z.norm())) return z;
      Vector zn = z - step_len * g;
      Vector gn = grad(zn);
      const Vector sx = zn - z;
      const Vector sg = gn - g;
      const double denom = sg.squaredNorm();
      if (denom > 0.0) step_len = std::clamp(sx.dot(sg) / denom, 1e-12, 1e12);
      z = std::move(zn);
      g = std::move(gn);
    }
    throw std::runtime_error("run_admm: last-block solve did not converge");
  };

  rec.stop_reason = "completed";
  for (long long cycle = 0; cycle < cfg.max_cycles; ++cycle) {
    if (static_cast<double>(rec.counters.block_updates) + blocks + 1 >
        cfg.max_block_updates) {
      rec.stop_reason = "max_passes";
      break;
    }
    // Leading blocks: linearized augmented term around the running residual.
    for (long long i = 0; i < blocks; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      const Vector residual = ax + xm - rp.bvec;
      const Vector grad_aug = rp.A[idx].transpose() * (lambda + rho * residual);
      Vector x_new = prox(static_cast<int>(i), grad_aug,
                          linearization_weight[idx], x[idx]);
      ax += rp.A[idx] * (x_new - x[idx]);
      x[idx] = std::move(x_new);
      rec.counters.block_updates += 1;
    }
    xm = solve_last_block(rp.bvec - ax);
    rec.counters.block_updates += 1;
    lambda += rho * (ax + xm - rp.bvec);
    const double feas = record_row();
    if (cfg.stop_tol > 0.0 && feas < cfg.stop_tol) {
      rec.stop_reason = "stop_tol";
      break;
    }
  }
  res.x_out = std::move(x);
  res.xm_out = std::move(xm);
  return res;
}

TuneOutcome tune_inner_iterations(const FiniteSumProblem& p,
                                  const std::vector<double>& factors,
                                  double budget_passes, std::uint64_t seed) {
  if (factors.empty()) {
    throw std::invalid_argument("tune_inner_iterations: factors must be nonempty");
  }
  TuneOutcome out;
  double best = std::numeric_limits<double>::infinity();
  for (const double factor : factors) {
    RapGradConfig cfg;
    cfg.outer_iterations = std::numeric_limits<long long>::max() / 2;
    cfg.s_factor = factor;
    cfg.seed = seed;
    cfg.max_passes = budget_passes;
    cfg.stop_tol = 0.0;
    const RapGradResult res = rapgrad_run(p, cfg);
    const double final_gns = res.record.rows.back().grad_norm_sq;
    out.results.emplace_back(factor, final_gns);
    if (final_gns < best) {
      best = final_gns;
      out.best_factor = factor;
    }
  }
  return out;
}

}  // namespace rapopt
