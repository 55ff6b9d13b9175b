#include "rapopt/rapdual.hpp"

#include <chrono>
#include <stdexcept>

namespace rapopt {

namespace {
constexpr double kSlack = 1.0 + 1e-12;
constexpr long long kAxCheckPeriod = 1000;
}

RaDualSchedule compute_radual_schedule(long long m, double L, double mu,
                                       double abar, DualCountRule rule) {
  if (m < 2) throw std::invalid_argument("compute_radual_schedule: m must be >= 2");
  if (!(mu > 0.0) || !(mu <= L)) {
    throw std::invalid_argument("compute_radual_schedule: requires 0 < mu <= L");
  }
  if (!(abar > 0.0)) {
    throw std::invalid_argument("compute_radual_schedule: abar must be > 0");
  }
  RaDualSchedule sch;
  const double blocks = static_cast<double>(m - 1);
  sch.abar = abar;
  sch.lhat = L + 2.0 * mu;
  sch.mu_bar = 1.0 / sch.lhat;
  sch.c = (2.0 * mu + L) * abar * abar / mu;
  const double root = std::sqrt(1.0 + 8.0 * sch.c);
  sch.alpha = 1.0 - 2.0 / (blocks * (root + 1.0));
  sch.alpha_t = blocks * sch.alpha;
  // tau = alpha/(1-alpha) and eta = (alpha - (m-2)/(m-1)) mu / (1-alpha),
  // written in forms that avoid the cancellation of the direct expressions.
  sch.tau = blocks * (root + 1.0) / 2.0 - 1.0;
  sch.eta = mu * (root - 1.0) / 2.0;
  if (!(sch.eta > 0.0)) {
    throw std::runtime_error("compute_radual_schedule: nonpositive eta");
  }
  const double ratio = L / mu;
  sch.mhat = rule == DualCountRule::kFullProduct
                 ? (2.0 + ratio) * std::max(2.0, ratio * ratio)
                 : 4.0 + 2.0 * ratio;
  sch.s = static_cast<long long>(
      std::ceil(-std::log(sch.mhat) / std::log(sch.alpha)));
  if (sch.s < 1) sch.s = 1;
  return sch;
}

ScheduleReport validate_radual_schedule(const RaDualSchedule& sch, long long m,
                                        double mu) {
  ScheduleReport rep;
  const auto fail = [&](const std::string& msg) {
    rep.pass = false;
    rep.violations.push_back(msg);
  };
  const auto check_le = [&](double lhs, double rhs, const char* name) {
    if (!(lhs <= rhs * kSlack)) {
      fail(std::string(name) + ": " + std::to_string(lhs) + " > " +
           std::to_string(rhs));
    }
  };
  const double blocks = static_cast<double>(m - 1);
  const double a = sch.alpha;

  if (!(a > 0.0 && a < 1.0)) fail("alpha outside (0,1)");
  if (!(sch.eta > 0.0)) fail("eta not positive");
  if (sch.s < 1) fail("s < 1");

  check_le(std::abs(sch.alpha_t - blocks * a), 1e-12 * std::max(1.0, sch.alpha_t),
           "extrapolation weight");
  check_le(std::abs(a * sch.gamma(2) - sch.gamma(1)), 1e-12 * sch.gamma(1),
           "gamma recursion");
  check_le(blocks * sch.eta + (blocks - 1.0) * mu,
           a * blocks * (sch.eta + mu), "primal-weight growth");
  check_le(sch.tau, a * (sch.tau + 1.0), "dual-weight growth");
  check_le(2.0 * blocks * a * sch.abar * sch.abar,
           sch.mu_bar * sch.eta * sch.tau, "primal-dual coupling");
  return rep;
}

namespace {

Vector dual_from_g(const RaDualContext& ctx, const Vector& g) {
  const Vector point = -g;
  return -(ctx.rp->problem.last_oracle.gradient(point) +
           2.0 * ctx.mu * (point - ctx.center_m));
}

void apply_block_update(RaDualState& st, const RaDualSchedule& sch,
                        const RaDualContext& ctx, int i,
                        EvalCounters* counters) {
  const Vector linear = ctx.rp->A[static_cast<std::size_t>(i)].transpose() * st.y;
  Vector x_new = ctx.prox(i, linear, sch.eta, st.x_cur[static_cast<std::size_t>(i)]);
  st.ax_cur += ctx.rp->A[static_cast<std::size_t>(i)] *
               (x_new - st.x_cur[static_cast<std::size_t>(i)]);
  st.x_prev[static_cast<std::size_t>(i)] =
      std::move(st.x_cur[static_cast<std::size_t>(i)]);
  st.x_cur[static_cast<std::size_t>(i)] = std::move(x_new);
  st.block_updates += 1;
  if (counters) counters->block_updates += 1;
}

}  // namespace

void radual_step(RaDualState& st, const RaDualSchedule& sch,
                 const RaDualContext& ctx, Pcg64& rng,
                 EvalCounters* counters) {
  const long long blocks = static_cast<long long>(st.x_cur.size());

  // Extrapolated constraint image; only blocks touched last step differ, and
  // ax_prev/ax_cur track them exactly.
  const Vector ax_tilde = st.ax_cur + sch.alpha_t * (st.ax_cur - st.ax_prev);
  st.g = (sch.tau * st.g + ax_tilde - ctx.rp->bvec) / (1.0 + sch.tau);
  st.y = dual_from_g(ctx, st.g);

  st.ax_prev = st.ax_cur;
  for (auto i = static_cast<std::size_t>(0); i < st.x_prev.size(); ++i) {
    st.x_prev[i] = st.x_cur[i];
  }

  if (ctx.batch) {
    for (int i = 0; i < blocks; ++i) apply_block_update(st, sch, ctx, i, counters);
  } else {
    const int it = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(blocks)));
    apply_block_update(st, sch, ctx, it, counters);
  }

  st.steps_done += 1;
  if (st.steps_done % kAxCheckPeriod == 0) {
    const Vector fresh = ctx.rp->apply(st.x_cur);
    if ((fresh - st.ax_cur).norm() > 1e-9 * (1.0 + fresh.norm())) {
      throw std::runtime_error(
          "radual_step: incremental constraint image drifted from the fresh product");
    }
    st.ax_cur = fresh;
  }
}

RaDualOutput radual_solve(const std::vector<Vector>& x0, const Vector& xm0,
                          const RaDualSchedule& sch, const RaDualContext& ctx,
                          long long steps, Pcg64& rng, EvalCounters* counters) {
  RaDualState st;
  st.x_prev = x0;
  st.x_cur = x0;
  st.g = -xm0;
  st.ax_cur = ctx.rp->apply(x0);
  st.ax_prev = st.ax_cur;
  st.y = Vector::Zero(xm0.size());

  for (long long t = 0; t < steps; ++t) radual_step(st, sch, ctx, rng, counters);

  RaDualOutput out;
  out.x = st.x_cur;
  out.xm = -st.g;  // exact: y = -grad psi_m(-g) makes -g the final argmin
  out.block_updates = st.block_updates;
  if (steps > 0) {
    const Vector grad_psi_m =
        ctx.rp->problem.last_oracle.gradient(out.xm) +
        2.0 * ctx.mu * (out.xm - ctx.center_m);
    if ((grad_psi_m + st.y).norm() > 1e-9) {
      throw std::runtime_error(
          "radual_solve: last-block stationarity residual exceeds 1e-9");
    }
  }
  return out;
}

BlockProxFactory generic_block_prox_factory(const MultiBlockProblem& p,
                                            double tol, long long max_iter) {
  // Oracles and sets are captured by value so the factory stays valid when
  // the problem is copied around.
  std::vector<ComponentOracle> oracles;
  std::vector<FeasibleSet> sets;
  oracles.reserve(p.blocks.size());
  sets.reserve(p.blocks.size());
  for (const auto& blk : p.blocks) {
    oracles.push_back(blk.oracle);
    sets.push_back(blk.set);
  }
  const double L = p.L;
  return [oracles, sets, L, tol, max_iter](const std::vector<Vector>& centers,
                                           double mu) -> BlockProx {
    return [oracles, sets, L, centers, mu, tol, max_iter](
               int i, const Vector& linear, double eta,
               const Vector& x_ref) -> Vector {
      const ComponentOracle& oracle = oracles[static_cast<std::size_t>(i)];
      const FeasibleSet& set = sets[static_cast<std::size_t>(i)];
      const Vector& center = centers[static_cast<std::size_t>(i)];
      const auto grad = [&](const Vector& x) -> Vector {
        return oracle.gradient(x) + 2.0 * mu * (x - center) + linear +
               eta * (x - x_ref);
      };

      if (x_ref.size() == 1 && set.is_whole_space()) {
        // Scalar strongly convex objective: the derivative is increasing, so
        // expand a sign bracket and close it with safeguarded secant steps.
        double lo = x_ref[0], hi = x_ref[0];
        double width = std::max(1.0, std::abs(x_ref[0]));
        Vector probe(1);
        const auto d = [&](double v) {
          probe[0] = v;
          return grad(probe)[0];
        };
        double dlo = d(lo), dhi = d(hi);
        for (int k = 0; k < 200 && dlo > 0.0; ++k) {
          lo -= width;
          width *= 2.0;
          dlo = d(lo);
        }
        width = std::max(1.0, std::abs(x_ref[0]));
        for (int k = 0; k < 200 && dhi < 0.0; ++k) {
          hi += width;
          width *= 2.0;
          dhi = d(hi);
        }
        double x = 0.5 * (lo + hi);
        for (long long it = 0; it < max_iter; ++it) {
          const double dx = d(x);
          if (std::abs(dx) <= tol * (1.0 + std::abs(x))) {
            probe[0] = x;
            return probe;
          }
          if (dx > 0.0) {
            hi = x;
            dhi = dx;
          } else {
            lo = x;
            dlo = dx;
          }
          double next = x;
          if (dhi != dlo) next = (lo * dhi - hi * dlo) / (dhi - dlo);
          if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
          if (next == x) next = 0.5 * (lo + hi);
          if (hi - lo <= 1e-18 * (1.0 + std::abs(x))) {
            probe[0] = x;
            return probe;
          }
          x = next;
        }
        throw std::runtime_error("block prox: scalar solve did not converge");
      }

      // Projected gradient with a spectral step.
      Vector x = set.project(x_ref);
      Vector g = grad(x);
      double step = 1.0 / std::max(L + 2.0 * mu + eta, 1e-12);
      for (long long it = 0; it < max_iter; ++it) {
        Vector xn = set.project(x - step * g);
        if ((x - xn).norm() / step <= tol * (1.0 + x.norm())) return xn;
        Vector gn = grad(xn);
        const Vector sx = xn - x;
        const Vector sg = gn - g;
        const double denom = sg.squaredNorm();
        step = denom > 0.0 ? std::clamp(sx.dot(sg) / denom, 1e-12, 1e12)
                           : step;
        x = std::move(xn);
        g = std::move(gn);
      }
      throw std::runtime_error("block prox: gradient solve did not converge");
    };
  };
}

RapDualResult rapdual_run(const MultiBlockProblem& p, const RapDualConfig& cfg) {
  return rapdual_run(reformulate(p), cfg);
}

RapDualResult rapdual_run(const ReformulatedProblem& rp,
                          const RapDualConfig& cfg) {
  const MultiBlockProblem& p = rp.problem;
  p.validate();
  if (cfg.outer_iterations < 1) {
    throw std::invalid_argument("rapdual_run: outer iteration count must be >= 1");
  }
  const long long m = p.m();
  const long long blocks = m - 1;

  const double abar = cfg.batch ? std::sqrt(rp.anorm2) : rp.abar;
  const long long sched_m = cfg.batch ? 2 : m;
  RaDualSchedule sch = compute_radual_schedule(sched_m, p.L, p.mu, abar, cfg.s_rule);
  long long s = sch.s;
  if (cfg.s_override) {
    if (*cfg.s_override < 0) {
      throw std::invalid_argument("rapdual_run: s override must be >= 0");
    }
    s = *cfg.s_override;
  } else if (cfg.s_factor != 1.0) {
    if (!(cfg.s_factor > 0.0)) {
      throw std::invalid_argument("rapdual_run: s factor must be positive");
    }
    s = std::max<long long>(
        1, static_cast<long long>(std::floor(static_cast<double>(sch.s) * cfg.s_factor)));
  }

  Pcg64 rng(cfg.seed);
  Pcg64 select_rng(derive_stream(cfg.seed, 1));

  RapDualResult res;
  res.schedule = sch;
  RunRecord& rec = res.record;
  rec.seed = cfg.seed;

  // Exactly feasible start: last block absorbs the constraint residual.
  std::vector<Vector> xbar(static_cast<std::size_t>(blocks));
  for (long long i = 0; i < blocks; ++i) {
    const auto& blk = p.blocks[static_cast<std::size_t>(i)];
    if (cfg.x0.empty()) {
      xbar[static_cast<std::size_t>(i)] = blk.set.project(Vector::Zero(blk.dim));
    } else {
      xbar[static_cast<std::size_t>(i)] =
          blk.set.project(cfg.x0[static_cast<std::size_t>(i)]);
    }
  }
  Vector xm_bar = rp.bvec - rp.apply(xbar);
  const Vector y0 = -p.last_oracle.gradient(xm_bar);
  const double init_feas = (rp.apply(xbar) + xm_bar - rp.bvec).squaredNorm();

  rec.config = {
      {"method", cfg.batch ? "batch-rapdual" : "rapdual"},
      {"outer_iterations", cfg.outer_iterations},
      {"inner_iterations", s},
      {"s_factor", cfg.s_factor},
      {"seed", cfg.seed},
      {"initial_blocks", "zero-projected"},
      {"initial_feasibility_sq", init_feas},
      {"output_rule", cfg.output_rule == OutputRule::kUniformRandom
                          ? "uniform-random"
                          : "best-by-feasibility"},
      {"schedule",
       {{"alpha", sch.alpha},
        {"alpha_t", sch.alpha_t},
        {"tau", sch.tau},
        {"eta", sch.eta},
        {"s_theoretical", sch.s},
        {"mhat", sch.mhat},
        {"c", sch.c},
        {"abar", sch.abar},
        {"anorm2", rp.anorm2},
        {"mu_bar", sch.mu_bar},
        {"lhat", sch.lhat},
        {"mu", p.mu},
        {"L", p.L}}},
  };
  if (cfg.output_rule == OutputRule::kBestByMetric) {
    rec.config["deviations"] = {
        "output rule replaces the random pick by the most feasible iterate"};
  }

  const auto start = std::chrono::steady_clock::now();
  const auto wall_ms = [&start]() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start)
        .count();
  };
  const double pass_denom = static_cast<double>(blocks);
  const auto record_row = [&](const std::vector<Vector>& x, const Vector& xm,
                              const std::optional<ProxCenterData>& centers) {
    double objective = p.last_oracle.value(xm);
    for (long long i = 0; i < blocks; ++i) {
      objective += p.blocks[static_cast<std::size_t>(i)].oracle.value(
          x[static_cast<std::size_t>(i)]);
    }
    const StationarityReport kkt = multiblock_kkt(rp, x, xm, centers);
    TrajectoryRow row;
    row.pass = static_cast<double>(rec.counters.block_updates) / pass_denom;
    row.objective = objective;
    row.grad_norm_sq = kkt.ncone_dist_sq;
    row.feasibility_sq = *kkt.feasibility_sq;
    row.wall_ms = wall_ms();
    rec.rows.push_back(row);
    return row;
  };
  record_row(xbar, xm_bar, std::nullopt);

  BlockProxFactory factory =
      p.block_prox ? p.block_prox : generic_block_prox_factory(p);

  std::vector<std::vector<Vector>> outer_x;
  std::vector<Vector> outer_xm;
  std::vector<ProxCenterData> outer_centers;
  std::vector<double> outer_feas;

  rec.stop_reason = "completed";
  for (long long ell = 1; ell <= cfg.outer_iterations; ++ell) {
    RaDualContext ctx;
    ctx.rp = &rp;
    ctx.centers = xbar;
    ctx.center_m = xm_bar;
    ctx.mu = p.mu;
    ctx.batch = cfg.batch;
    ctx.prox = factory(ctx.centers, p.mu);

    long long steps = s;
    bool budget_hit = false;
    const long long updates_per_step = cfg.batch ? blocks : 1;
    const double remaining =
        cfg.max_block_updates - static_cast<double>(rec.counters.block_updates);
    if (static_cast<double>(steps) * updates_per_step > remaining) {
      steps = static_cast<long long>(remaining / updates_per_step);
      budget_hit = true;
      if (steps < 0) steps = 0;
    }

    RaDualOutput out = radual_solve(xbar, xm_bar, sch, ctx, steps, rng,
                                    &rec.counters);
    xbar = std::move(out.x);
    xm_bar = std::move(out.xm);

    const ProxCenterData centers{p.mu, ctx.center_m};
    const TrajectoryRow row = record_row(xbar, xm_bar, centers);
    outer_x.push_back(xbar);
    outer_xm.push_back(xm_bar);
    outer_centers.push_back(centers);
    outer_feas.push_back(row.feasibility_sq);

    if (cfg.stop_tol > 0.0 && row.grad_norm_sq < cfg.stop_tol) {
      rec.stop_reason = "stop_tol";
      break;
    }
    if (budget_hit) {
      rec.stop_reason = "max_passes";
      break;
    }
  }

  std::size_t pick;
  if (cfg.output_rule == OutputRule::kBestByMetric) {
    pick = 0;
    for (std::size_t i = 1; i < outer_feas.size(); ++i) {
      if (outer_feas[i] < outer_feas[pick]) pick = i;
    }
  } else {
    pick = static_cast<std::size_t>(
        select_rng.bounded(static_cast<std::uint64_t>(outer_x.size())));
  }
  res.x_out = outer_x[pick];
  res.xm_out = outer_xm[pick];
  rec.selected_outer = static_cast<int>(pick) + 1;
  rec.selected_center = outer_centers[pick].last_center;
  rec.config["initial_dual"] = std::vector<double>(y0.data(), y0.data() + y0.size());
  return res;
}

}  // namespace rapopt
