#include "rapopt/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace rapopt {

namespace {
// Activity tolerance for box bounds, scaled by the bound magnitude.
bool at_bound(double x, double bound) {
  return std::abs(x - bound) <= 1e-12 * (1.0 + std::abs(bound));
}
}  // namespace

double ncone_distance_sq(const Vector& g, const FeasibleSet& set,
                         const Vector& x) {
  check_finite(g, "ncone_distance_sq");
  check_finite(x, "ncone_distance_sq");
  if (set.is_whole_space()) return g.squaredNorm();
  if (set.violation(x) > 1e-12) {
    throw std::invalid_argument("ncone_distance_sq: x lies outside the set");
  }
  double dist_sq = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const bool low = at_bound(x[j], set.lower()[j]);
    const bool up = at_bound(x[j], set.upper()[j]);
    double residual;
    if (low && up) {
      residual = 0.0;  // pinned coordinate, the cone is the whole line
    } else if (low) {
      residual = std::max(0.0, -g[j]);  // cone absorbs g_j >= 0
    } else if (up) {
      residual = std::max(0.0, g[j]);  // cone absorbs g_j <= 0
    } else {
      residual = g[j];  // interior: cone is {0}
    }
    dist_sq += residual * residual;
  }
  return dist_sq;
}

double strong_gap(const FiniteSumProblem& p, const Vector& x,
                  EvalCounters* counters) {
  if (p.set.is_whole_space()) {
    throw std::invalid_argument("strong_gap: requires a compact (box) set");
  }
  if (p.set.violation(x) > 1e-12) {
    throw std::invalid_argument("strong_gap: x lies outside the set");
  }
  const Vector g = full_gradient(p, x, counters);
  // max over z of <g, x - z> decomposes coordinatewise over a box.
  double gap = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double z = g[j] >= 0.0 ? p.set.lower()[j] : p.set.upper()[j];
    gap += g[j] * (x[j] - z);
  }
  return gap;
}

StationarityReport multiblock_kkt(const ReformulatedProblem& rp,
                                  const std::vector<Vector>& x,
                                  const Vector& xm,
                                  const std::optional<ProxCenterData>& centers) {
  const MultiBlockProblem& p = rp.problem;
  if (x.size() != p.blocks.size()) {
    throw std::invalid_argument("multiblock_kkt: block count mismatch");
  }
  const Vector grad_m = p.last_oracle.gradient(xm);
  Vector lambda_hat;
  if (centers) {
    lambda_hat = -(grad_m + 2.0 * centers->mu * (xm - centers->last_center));
  } else {
    lambda_hat = -grad_m;
  }

  StationarityReport rep;
  rep.grad_norm_sq = (grad_m + lambda_hat).squaredNorm();

  double block_sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Vector gi =
        p.blocks[i].oracle.gradient(x[i]) + rp.A[i].transpose() * lambda_hat;
    block_sq += ncone_distance_sq(gi, p.blocks[i].set, x[i]);
  }
  rep.kkt_block_sq = block_sq;
  rep.feasibility_sq = (rp.apply(x) + xm - rp.bvec).squaredNorm();
  rep.ncone_dist_sq = block_sq + rep.grad_norm_sq;
  return rep;
}

Vector prox_gradient_min(const FiniteSumProblem& p, const Vector& x0,
                         double prox_weight, const Vector& center, double tol,
                         long long max_iter, EvalCounters* counters) {
  check_finite(x0, "prox_gradient_min");
  check_finite(center, "prox_gradient_min");
  const auto gradient = [&](const Vector& x) {
    return (full_gradient(p, x, counters) + prox_weight * (x - center)).eval();
  };

  // Fixed certified step; objective comparisons cannot certify decrease near
  // the optimum (they drown in rounding noise), so the safeguard watches the
  // gradient-mapping norm instead and backs the step off on growth.
  Vector x = p.set.project(x0);
  double step = 1.0 / std::max(p.L + prox_weight, 1e-12);
  double best_mapping = std::numeric_limits<double>::infinity();
  for (long long it = 0; it < max_iter; ++it) {
    const Vector g = gradient(x);
    const Vector xn = p.set.project(x - step * g);
    const double mapping = (x - xn).norm() / step;
    if (mapping <= tol) return x;
    if (it > 100 && mapping > 4.0 * best_mapping) {
      step *= 0.5;  // the stated smoothness constant was too small
      best_mapping = std::numeric_limits<double>::infinity();
      continue;
    }
    best_mapping = std::min(best_mapping, mapping);
    x = xn;
  }
  throw std::runtime_error("prox_gradient_min: tolerance not reached");
}

Certificate eps_delta_certificate(const FiniteSumProblem& p, const Vector& x,
                                  const Vector& center, double tol,
                                  EvalCounters* counters) {
  Certificate cert;
  cert.xhat = prox_gradient_min(p, center, 3.0 * p.mu, center, tol, 2000000,
                                counters);
  const Vector g = full_gradient(p, cert.xhat, counters);
  cert.eps_hat = ncone_distance_sq(g, p.set, cert.xhat);
  cert.delta_hat = (x - cert.xhat).squaredNorm();
  return cert;
}

}  // namespace rapopt
