#ifndef RAPOPT_RAPGRAD_HPP
#define RAPOPT_RAPGRAD_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rapopt/metrics.hpp"
#include "rapopt/problems.hpp"
#include "rapopt/rng.hpp"

namespace rapopt {

// Rule for the constant inside the log that fixes the inner iteration count.
// kFullProduct is the default; the two leaner alternatives trade guarantees
// for fewer iterations and are kept selectable.
enum class InnerCountRule { kFullProduct, kSevenSixths, kSixFifths };

struct RaGradSchedule {
  double alpha = 0.0;   // extrapolation / contraction factor, in (0,1)
  double tau = 0.0;     // mirror-point averaging weight
  double eta = 0.0;     // prox-step damping
  long long s = 0;      // inner iterations per subproblem
  double mtilde = 0.0;  // accuracy constant that determines s
  double c = 0.0;       // condition aggregate 2 + L/mu
  double lhat = 0.0;    // smoothness of the shifted components, L + 2 mu

  double gamma(long long t) const { return std::pow(alpha, -static_cast<double>(t)); }
};

struct ScheduleReport {
  bool pass = true;
  std::vector<std::string> violations;
};

RaGradSchedule compute_ragrad_schedule(long long m, double L, double mu,
                                       InnerCountRule rule = InnerCountRule::kFullProduct);

// Checks the six sufficient conditions for the inner-solver contraction with
// multiplicative slack 1 + 1e-12. Constant schedules reduce each condition
// to a single inequality.
ScheduleReport validate_ragrad_schedule(const RaGradSchedule& sch, long long m,
                                        double mu);

// State of the inner solver: the two latest prox iterates, per-component
// mirror points and gradients, their running sum, and the prox center.
struct RaGradState {
  Vector x_prev, x_cur;
  std::vector<Vector> x_under;
  std::vector<Vector> y;
  Vector y_sum;
  Vector center;
  long long grad_count = 0;

  void refresh_y_sum();
};

using ComponentGrad = std::function<Vector(int i, const Vector& x)>;

// One inner iteration: extrapolate, update one random mirror point and its
// gradient, take the damped prox step in closed form.
void ragrad_step(RaGradState& st, const RaGradSchedule& sch,
                 const ComponentGrad& psi_grad, const FeasibleSet& set,
                 double mu, Pcg64& rng);

// Runs `steps` inner iterations on psi_i(x) = f_i(x) + mu ||x - center||^2.
// Performs exactly `steps` component-gradient evaluations; each adds
// `grad_cost` to the counters (m for the batch variant).
void ragrad_solve(RaGradState& st, const RaGradSchedule& sch, long long steps,
                  const FiniteSumProblem& p, double mu, Pcg64& rng,
                  EvalCounters* counters = nullptr, long long grad_cost = 1);

enum class OutputRule { kUniformRandom, kBestByMetric };

struct RapGradConfig {
  long long outer_iterations = 1;  // k
  std::optional<long long> s_override;
  double s_factor = 1.0;  // scales the theoretical s, floored at 1
  std::uint64_t seed = 0;
  OutputRule output_rule = OutputRule::kUniformRandom;
  bool batch = false;  // treat the average as a single component
  bool verify_invariants = false;
  double stop_tol = 0.0;  // on ||grad f||^2; 0 disables early stopping
  double max_passes = std::numeric_limits<double>::infinity();
  InnerCountRule s_rule = InnerCountRule::kFullProduct;
  Vector x0;  // empty: zero vector projected onto the set
};

struct RapGradResult {
  Vector x_out;
  RunRecord record;
  RaGradSchedule schedule;
};

// Proximal-point outer loop around the randomized inner solver. The only
// full gradient pass happens at initialization; afterwards the carried
// per-component gradients keep every subproblem warm-started.
RapGradResult rapgrad_run(const FiniteSumProblem& p, const RapGradConfig& cfg);

}  // namespace rapopt

#endif
