#ifndef RAPOPT_METRICS_HPP
#define RAPOPT_METRICS_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rapopt/problems.hpp"

namespace rapopt {

struct StationarityReport {
  double grad_norm_sq = 0.0;   // finite-sum: ||grad f||^2; multi-block: last-block residual
  double ncone_dist_sq = 0.0;  // squared distance of the gradient to -N_X
  std::optional<double> strong_gap;
  std::optional<double> feasibility_sq;
  std::optional<double> kkt_block_sq;  // multi-block: sum of per-block residuals
};

struct TrajectoryRow {
  double pass = 0.0;
  double objective = 0.0;
  double grad_norm_sq = 0.0;
  // NaN renders as an empty CSV cell (finite-sum runs have no feasibility).
  double feasibility_sq = std::numeric_limits<double>::quiet_NaN();
  std::int64_t wall_ms = 0;
};

struct RunRecord {
  std::vector<TrajectoryRow> rows;
  EvalCounters counters;         // algorithm cost (drives the pass axis)
  EvalCounters metric_counters;  // evaluations spent on metrics only
  nlohmann::json config;         // method, schedule constants, defaults used
  std::uint64_t seed = 0;
  std::string stop_reason;       // "completed", "stop_tol", "max_passes"
  int selected_outer = 0;        // the randomly selected outer iterate
  Vector selected_center;        // proximal center paired with it
};

// Squared distance from g to -N_X(x). Whole space: ||g||^2. Box: computed
// coordinatewise; at an active lower bound any g_j >= 0 is absorbed by the
// cone, at an active upper bound any g_j <= 0 is. Requires x feasible to
// within 1e-12.
double ncone_distance_sq(const Vector& g, const FeasibleSet& set,
                         const Vector& x);

// gap(x) = max_{z in X} <grad f(x), x - z>, closed form over boxes; throws
// for non-compact sets.
double strong_gap(const FiniteSumProblem& p, const Vector& x,
                  EvalCounters* counters = nullptr);

// Prox centers of the subproblem the iterate came from; when supplied the
// multiplier estimate uses the shifted gradient of the last block.
struct ProxCenterData {
  double mu = 0.0;
  Vector last_center;
};

// KKT residuals of a multi-block point: multiplier estimated from the last
// block, per-block normal-cone distances, and constraint violation.
StationarityReport multiblock_kkt(
    const ReformulatedProblem& rp, const std::vector<Vector>& x,
    const Vector& xm, const std::optional<ProxCenterData>& centers = {});

// Deterministic projected gradient with backtracking for
//   min_{x in X} f(x) + (prox_weight/2) ||x - center||^2.
// Stops when the gradient-mapping norm is <= tol; throws on non-convergence.
Vector prox_gradient_min(const FiniteSumProblem& p, const Vector& x0,
                         double prox_weight, const Vector& center, double tol,
                         long long max_iter = 2000000,
                         EvalCounters* counters = nullptr);

struct Certificate {
  double eps_hat = 0.0;    // squared stationarity residual at the reference point
  double delta_hat = 0.0;  // squared distance from x to the reference point
  Vector xhat;
};

// Realizes the two quantities of the solution-quality definition: solves the
// proximal subproblem at `center` to high accuracy, then measures the
// stationarity of that reference point and the distance of x to it.
Certificate eps_delta_certificate(const FiniteSumProblem& p, const Vector& x,
                                  const Vector& center, double tol = 1e-12,
                                  EvalCounters* counters = nullptr);

}  // namespace rapopt

#endif
