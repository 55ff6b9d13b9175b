#ifndef RAPOPT_BASELINES_HPP
#define RAPOPT_BASELINES_HPP

#include "rapopt/metrics.hpp"
#include "rapopt/problems.hpp"
#include "rapopt/rapgrad.hpp"
#include "rapopt/rng.hpp"

namespace rapopt {

struct SvrgConfig {
  double step = 0.0;            // 0: 1 / (3 L m^{2/3})
  long long epoch_length = -1;  // inner steps per epoch; negative: m
  double stop_tol = 1e-10;      // on ||grad f||^2
  double max_passes = 3e4;
  std::uint64_t seed = 0;
  Vector x0;
};

struct BaselineResult {
  Vector x_out;
  RunRecord record;
};

// Epoch-based variance reduction: one full gradient at the anchor per epoch
// (the per-component anchor gradients are cached, so every inner step costs
// exactly one new component gradient).
BaselineResult run_svrg(const FiniteSumProblem& p, const SvrgConfig& cfg);

enum class AgStepPolicy {
  kBracket,  // cautious steps valid without convexity
  kGrowing,  // classical growing steps for the convex regime
};

struct AgConfig {
  AgStepPolicy policy = AgStepPolicy::kBracket;
  double momentum_scale = 1.0;  // 0 turns the method into plain descent
  double stop_tol = 1e-10;
  double max_passes = 3e4;
  Vector x0;
};

// Deterministic accelerated gradient with full passes; one pass per
// iteration.
BaselineResult run_ag(const FiniteSumProblem& p, const AgConfig& cfg);

struct AdmmConfig {
  long long max_cycles = 1000;
  double stop_tol = 0.0;  // on the feasibility residual squared; 0 disables
  double max_block_updates = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
};

struct AdmmResult {
  std::vector<Vector> x_out;
  Vector xm_out;
  RunRecord record;
};

// Cyclic proximal ADMM on the reformulated constraint with penalty rho;
// block updates are counted on the same axis as the dual solvers
// (one full cycle = m updates).
AdmmResult run_admm(const MultiBlockProblem& p, double rho,
                    const AdmmConfig& cfg);
AdmmResult run_admm(const ReformulatedProblem& rp, double rho,
                    const AdmmConfig& cfg);

struct TuneOutcome {
  double best_factor = 1.0;
  std::vector<std::pair<double, double>> results;  // factor -> final ||grad f||^2
};

// Runs the randomized solver once per factor (inner count scaled and floored
// at 1) for the given pass budget and returns the factor with the smallest
// final squared gradient norm.
TuneOutcome tune_inner_iterations(const FiniteSumProblem& p,
                                  const std::vector<double>& factors,
                                  double budget_passes, std::uint64_t seed);

}  // namespace rapopt

#endif
