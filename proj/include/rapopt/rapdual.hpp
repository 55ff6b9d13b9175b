#ifndef RAPOPT_RAPDUAL_HPP
#define RAPOPT_RAPDUAL_HPP

#include <optional>

#include "rapopt/metrics.hpp"
#include "rapopt/problems.hpp"
#include "rapopt/rapgrad.hpp"
#include "rapopt/rng.hpp"

namespace rapopt {

// Constant inside the log fixing the dual inner iteration count; the linear
// alternative is selectable.
enum class DualCountRule { kFullProduct, kLinear };

struct RaDualSchedule {
  double alpha = 0.0;    // contraction factor (the tilde quantity), in (0,1)
  double alpha_t = 0.0;  // extrapolation weight, (m-1) * alpha
  double tau = 0.0;      // dual averaging weight
  double eta = 0.0;      // primal block damping
  long long s = 0;       // inner iterations per subproblem
  double mhat = 0.0;     // accuracy constant that determines s
  double c = 0.0;        // coupling aggregate (2 mu + L) abar^2 / mu
  double abar = 0.0;     // max block operator norm
  double mu_bar = 0.0;   // strong convexity of the dual function, 1 / lhat
  double lhat = 0.0;     // L + 2 mu

  double gamma(long long t) const { return std::pow(alpha, -static_cast<double>(t)); }
};

// m counts all blocks including the last; requires m >= 2 and abar > 0.
RaDualSchedule compute_radual_schedule(long long m, double L, double mu,
                                       double abar,
                                       DualCountRule rule = DualCountRule::kFullProduct);

// Five sufficient conditions for the dual contraction, slack 1 + 1e-12.
ScheduleReport validate_radual_schedule(const RaDualSchedule& sch, long long m,
                                        double mu);

// Inner-solver state. The running constraint images of the two latest block
// iterates are maintained incrementally and re-verified against a fresh
// product every 1000 steps.
struct RaDualState {
  std::vector<Vector> x_prev, x_cur;
  Vector g;  // dual-gradient surrogate
  Vector y;  // dual iterate, equals -grad psi_m(-g) after every step
  Vector ax_cur, ax_prev;
  long long block_updates = 0;
  long long steps_done = 0;
};

struct RaDualContext {
  const ReformulatedProblem* rp = nullptr;
  std::vector<Vector> centers;  // block prox centers
  Vector center_m;              // last-block prox center
  double mu = 0.0;
  BlockProx prox;
  bool batch = false;  // update every block each iteration
};

void radual_step(RaDualState& st, const RaDualSchedule& sch,
                 const RaDualContext& ctx, Pcg64& rng,
                 EvalCounters* counters = nullptr);

struct RaDualOutput {
  std::vector<Vector> x;
  Vector xm;
  long long block_updates = 0;
};

// Runs s steps from blocks x0 / last block xm0 with g initialized to -xm0,
// then recovers the last block as -g. The closed-form recovery satisfies the
// final stationarity exactly; the residual is re-checked and a failure
// signals an implementation bug.
RaDualOutput radual_solve(const std::vector<Vector>& x0, const Vector& xm0,
                          const RaDualSchedule& sch, const RaDualContext& ctx,
                          long long steps, Pcg64& rng,
                          EvalCounters* counters = nullptr);

struct RapDualConfig {
  long long outer_iterations = 1;  // k
  std::optional<long long> s_override;
  double s_factor = 1.0;
  std::uint64_t seed = 0;
  OutputRule output_rule = OutputRule::kUniformRandom;
  bool batch = false;
  double stop_tol = 0.0;  // on the recorded KKT residual; 0 disables
  double max_block_updates = std::numeric_limits<double>::infinity();
  DualCountRule s_rule = DualCountRule::kFullProduct;
  std::vector<Vector> x0;  // empty: zeros projected blockwise
};

struct RapDualResult {
  std::vector<Vector> x_out;
  Vector xm_out;
  RunRecord record;
  RaDualSchedule schedule;
};

// Proximal-point outer loop around the randomized dual solver. Reformulates
// once; the initial point is exactly feasible by construction.
RapDualResult rapdual_run(const MultiBlockProblem& p, const RapDualConfig& cfg);
RapDualResult rapdual_run(const ReformulatedProblem& rp, const RapDualConfig& cfg);

// Gradient-based fallback prox for smooth blocks without a custom solver.
BlockProxFactory generic_block_prox_factory(const MultiBlockProblem& p,
                                            double tol = 1e-12,
                                            long long max_iter = 100000);

}  // namespace rapopt

#endif
