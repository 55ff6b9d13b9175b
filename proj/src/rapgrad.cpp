#include "rapopt/rapgrad.hpp"

#include <chrono>
#include <stdexcept>

namespace rapopt {

namespace {
constexpr double kSlack = 1.0 + 1e-12;
}

RaGradSchedule compute_ragrad_schedule(long long m, double L, double mu,
                                       InnerCountRule rule) {
  if (m < 1) throw std::invalid_argument("compute_ragrad_schedule: m must be >= 1");
  if (!(mu > 0.0) || !(mu <= L)) {
    throw std::invalid_argument("compute_ragrad_schedule: requires 0 < mu <= L");
  }
  RaGradSchedule sch;
  const double md = static_cast<double>(m);
  sch.c = 2.0 + L / mu;
  sch.alpha = 1.0 - 2.0 / (md * (std::sqrt(1.0 + 16.0 * sch.c / md) + 1.0));
  sch.tau = 1.0 / (md * (1.0 - sch.alpha)) - 1.0;
  sch.eta = sch.alpha / (1.0 - sch.alpha);
  sch.lhat = L + 2.0 * mu;

  const double ratio = L / mu;
  const double base = 6.0 * (5.0 + 2.0 * ratio);
  switch (rule) {
    case InnerCountRule::kFullProduct:
      sch.mtilde = base * std::max(6.0 / 5.0, ratio * ratio);
      break;
    case InnerCountRule::kSevenSixths:
      sch.mtilde = 7.0 * base / 6.0;
      break;
    case InnerCountRule::kSixFifths:
      sch.mtilde = 6.0 * base / 5.0;
      break;
  }
  sch.s = static_cast<long long>(
      std::ceil(-std::log(sch.mtilde) / std::log(sch.alpha)));
  if (sch.s < 1) sch.s = 1;
  return sch;
}

ScheduleReport validate_ragrad_schedule(const RaGradSchedule& sch, long long m,
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

  const double md = static_cast<double>(m);
  const double a = sch.alpha;
  const double tau = sch.tau;
  const double eta = sch.eta;
  const double lhat = sch.lhat;

  if (!(a > 0.0 && a < 1.0)) fail("alpha outside (0,1)");
  if (sch.s < 1) fail("s < 1");

  // Constant parameters and gamma_t = alpha^{-t} make each condition a
  // single inequality after dividing by gamma_t.
  check_le(std::abs(a * sch.gamma(2) - sch.gamma(1)), 1e-12 * sch.gamma(1),
           "gamma recursion");
  check_le(md * (1.0 + tau) - 1.0, a * md * (1.0 + tau), "mirror-weight growth");
  check_le(eta, a * (1.0 + eta), "prox-weight growth");
  check_le((md - 1.0) * (md - 1.0) * lhat / (md * md * tau), eta * mu / 4.0,
           "terminal mirror coupling");
  check_le(a * lhat / tau + (md - 1.0) * (md - 1.0) * lhat / (md * md * tau),
           eta * mu / 2.0, "per-step coupling");
  check_le(lhat / (md * (1.0 + tau)), eta * mu / 4.0, "terminal prox coupling");
  return rep;
}

void RaGradState::refresh_y_sum() {
  y_sum = Vector::Zero(x_cur.size());
  for (const auto& yi : y) y_sum += yi;
}

void ragrad_step(RaGradState& st, const RaGradSchedule& sch,
                 const ComponentGrad& psi_grad, const FeasibleSet& set,
                 double mu, Pcg64& rng) {
  const long long m = static_cast<long long>(st.y.size());
  const int it = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(m)));

  const Vector x_tilde = sch.alpha * (st.x_cur - st.x_prev) + st.x_cur;
  st.x_under[it] = (x_tilde + sch.tau * st.x_under[it]) / (1.0 + sch.tau);

  const Vector y_new = psi_grad(it, st.x_under[it]);
  st.grad_count += 1;

  // Only one mirror gradient changes, so the average of the extrapolated
  // gradients collapses to y_sum/m plus the single difference.
  const Vector g_bar =
      st.y_sum / static_cast<double>(m) + (y_new - st.y[it]);
  st.y_sum += y_new - st.y[it];
  st.y[it] = y_new;

  // Closed form of the damped prox step: the objective is an isotropic
  // quadratic, so projecting its unconstrained minimizer is exact.
  Vector x_next =
      (st.center + sch.eta * st.x_cur - g_bar / mu) / (1.0 + sch.eta);
  x_next = set.project(x_next);

  st.x_prev = std::move(st.x_cur);
  st.x_cur = std::move(x_next);
}

void ragrad_solve(RaGradState& st, const RaGradSchedule& sch, long long steps,
                  const FiniteSumProblem& p, double mu, Pcg64& rng,
                  EvalCounters* counters, long long grad_cost) {
  const auto psi_grad = [&](int i, const Vector& x) -> Vector {
    return p.components[i].gradient(x) + 2.0 * mu * (x - st.center);
  };
  st.refresh_y_sum();
  for (long long t = 0; t < steps; ++t) {
    ragrad_step(st, sch, psi_grad, p.set, mu, rng);
    if (counters) counters->component_grad_evals += grad_cost;
  }
}

namespace {

// The batch variant treats the average as one component; a single gradient
// evaluation then costs a full pass.
FiniteSumProblem aggregate_problem(const FiniteSumProblem& p) {
  FiniteSumProblem agg;
  ComponentOracle c;
  c.dimension = p.dimension();
  c.value = [&p](const Vector& x) { return full_objective(p, x); };
  c.gradient = [&p](const Vector& x) { return full_gradient(p, x); };
  agg.components.push_back(std::move(c));
  agg.set = p.set;
  agg.L = p.L;
  agg.mu = p.mu;
  return agg;
}

}  // namespace

RapGradResult rapgrad_run(const FiniteSumProblem& problem,
                          const RapGradConfig& cfg) {
  problem.validate();
  if (cfg.outer_iterations < 1) {
    throw std::invalid_argument("rapgrad_run: outer iteration count must be >= 1");
  }

  const FiniteSumProblem* p = &problem;
  FiniteSumProblem aggregated;
  long long grad_cost = 1;
  if (cfg.batch) {
    aggregated = aggregate_problem(problem);
    p = &aggregated;
    grad_cost = problem.m();
  }
  const long long m = p->m();
  const long long m_orig = problem.m();
  const double mu = p->mu;

  RaGradSchedule sch = compute_ragrad_schedule(m, p->L, mu, cfg.s_rule);
  long long s = sch.s;
  if (cfg.s_override) {
    if (*cfg.s_override < 0) {
      throw std::invalid_argument("rapgrad_run: s override must be >= 0");
    }
    s = *cfg.s_override;
  } else if (cfg.s_factor != 1.0) {
    if (!(cfg.s_factor > 0.0)) {
      throw std::invalid_argument("rapgrad_run: s factor must be positive");
    }
    s = std::max<long long>(
        1, static_cast<long long>(std::floor(static_cast<double>(sch.s) * cfg.s_factor)));
  }

  Pcg64 rng(cfg.seed);
  Pcg64 select_rng(derive_stream(cfg.seed, 1));

  RapGradResult res;
  res.schedule = sch;
  RunRecord& rec = res.record;
  rec.seed = cfg.seed;
  rec.config = {
      {"method", cfg.batch ? "batch-rapgrad" : "rapgrad"},
      {"outer_iterations", cfg.outer_iterations},
      {"inner_iterations", s},
      {"s_factor", cfg.s_factor},
      {"seed", cfg.seed},
      {"initial_point", "zero-projected"},
      {"output_rule", cfg.output_rule == OutputRule::kUniformRandom
                          ? "uniform-random"
                          : "best-by-metric"},
      {"schedule",
       {{"alpha", sch.alpha},
        {"tau", sch.tau},
        {"eta", sch.eta},
        {"s_theoretical", sch.s},
        {"mtilde", sch.mtilde},
        {"c", sch.c},
        {"lhat", sch.lhat},
        {"mu", mu},
        {"L", p->L}}},
  };
  if (cfg.output_rule == OutputRule::kBestByMetric) {
    rec.config["deviations"] = {"output rule replaces the random pick by the best recorded iterate"};
  }

  Vector xbar = cfg.x0.size() > 0 ? cfg.x0 : Vector::Zero(p->dimension());
  check_finite(xbar, "rapgrad_run");
  xbar = p->set.project(xbar);

  RaGradState st;
  st.center = xbar;
  st.x_prev = xbar;
  st.x_cur = xbar;
  st.x_under.assign(static_cast<std::size_t>(m), xbar);
  st.y.resize(static_cast<std::size_t>(m));
  for (long long i = 0; i < m; ++i) {
    st.y[static_cast<std::size_t>(i)] =
        p->components[static_cast<std::size_t>(i)].gradient(xbar);
  }
  rec.counters.component_grad_evals += m * grad_cost;  // the only full pass
  st.refresh_y_sum();

  const auto start = std::chrono::steady_clock::now();
  const auto wall_ms = [&start]() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start)
        .count();
  };
  const double pass_denom = static_cast<double>(m_orig);
  const auto record_row = [&](const Vector& x) {
    TrajectoryRow row;
    row.pass = static_cast<double>(rec.counters.component_grad_evals) / pass_denom;
    row.objective = full_objective(problem, x, &rec.metric_counters);
    row.grad_norm_sq =
        full_gradient(problem, x, &rec.metric_counters).squaredNorm();
    row.wall_ms = wall_ms();
    rec.rows.push_back(row);
    return row.grad_norm_sq;
  };
  record_row(xbar);

  std::vector<Vector> outer_iterates;
  std::vector<Vector> outer_centers;
  std::vector<double> outer_metric;
  outer_iterates.reserve(static_cast<std::size_t>(
      std::min<long long>(cfg.outer_iterations, 1024)));

  rec.stop_reason = "completed";
  const double max_evals = cfg.max_passes * pass_denom;
  for (long long ell = 1; ell <= cfg.outer_iterations; ++ell) {
    const Vector center = xbar;
    st.center = center;
    st.x_prev = xbar;
    st.x_cur = xbar;
    st.refresh_y_sum();

    bool budget_hit = false;
    const auto psi_grad = [&](int i, const Vector& x) -> Vector {
      return p->components[static_cast<std::size_t>(i)].gradient(x) +
             2.0 * mu * (x - center);
    };
    for (long long t = 0; t < s; ++t) {
      if (static_cast<double>(rec.counters.component_grad_evals) + grad_cost >
          max_evals) {
        budget_hit = true;
        break;
      }
      ragrad_step(st, sch, psi_grad, p->set, mu, rng);
      rec.counters.component_grad_evals += grad_cost;
    }

    // Close the subproblem: keep mirror points and shift the gradients so
    // they match the next subproblem's components at those points.
    const Vector x_new = st.x_cur;
    for (auto& yi : st.y) yi += 2.0 * mu * (xbar - x_new);
    st.refresh_y_sum();
    xbar = x_new;

    if (cfg.verify_invariants) {
      Pcg64 probe(derive_stream(cfg.seed, 2 + static_cast<std::uint64_t>(ell)));
      const long long samples = std::min<long long>(m, 4);
      for (long long k = 0; k < samples; ++k) {
        const auto i = static_cast<std::size_t>(
            probe.bounded(static_cast<std::uint64_t>(m)));
        const Vector want =
            p->components[i].gradient(st.x_under[i]) +
            2.0 * mu * (st.x_under[i] - xbar);
        const double err = (st.y[i] - want).norm();
        if (err > 1e-9 * (1.0 + st.y[i].norm())) {
          throw std::runtime_error(
              "rapgrad_run: carried gradient invariant violated");
        }
      }
      Vector fresh = Vector::Zero(xbar.size());
      for (const auto& yi : st.y) fresh += yi;
      if ((fresh - st.y_sum).norm() > 1e-9 * (1.0 + fresh.norm())) {
        throw std::runtime_error("rapgrad_run: y_sum bookkeeping violated");
      }
    }

    const double gns = record_row(xbar);
    outer_iterates.push_back(xbar);
    outer_centers.push_back(center);
    outer_metric.push_back(gns);

    if (cfg.stop_tol > 0.0 && gns < cfg.stop_tol) {
      rec.stop_reason = "stop_tol";
      break;
    }
    if (budget_hit) {
      rec.stop_reason = "max_passes";
      break;
    }
  }

  if (outer_iterates.empty()) {
    res.x_out = xbar;
    rec.selected_outer = 0;
    rec.selected_center = xbar;
    return res;
  }

  std::size_t pick;
  if (cfg.output_rule == OutputRule::kBestByMetric) {
    pick = 0;
    for (std::size_t i = 1; i < outer_metric.size(); ++i) {
      if (outer_metric[i] < outer_metric[pick]) pick = i;
    }
  } else {
    pick = static_cast<std::size_t>(
        select_rng.bounded(static_cast<std::uint64_t>(outer_iterates.size())));
  }
  res.x_out = outer_iterates[pick];
  rec.selected_outer = static_cast<int>(pick) + 1;
  rec.selected_center = outer_centers[pick];
  return res;
}

}  // namespace rapopt
