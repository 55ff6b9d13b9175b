#include "rapopt/scad.hpp"

#include <cmath>
#include <stdexcept>

namespace rapopt {

void ScadParams::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("scad: lambda must be > 0");
  if (!(gamma > 2.0)) throw std::invalid_argument("scad: gamma must be > 2");
  if (!(eps > 0.0)) throw std::invalid_argument("scad: eps must be > 0");
  if (rho < 0.0) throw std::invalid_argument("scad: rho must be >= 0");
}

double scad_value(double x, const ScadParams& p) {
  const double r = std::sqrt(x * x + p.eps);
  if (r <= p.lambda) return p.lambda * r;
  if (r < p.gamma * p.lambda) {
    return (2.0 * p.gamma * p.lambda * r - r * r - p.lambda * p.lambda) /
           (2.0 * (p.gamma - 1.0));
  }
  return p.lambda * p.lambda * (p.gamma + 1.0) / 2.0;
}

double scad_grad(double x, const ScadParams& p) {
  const double r = std::sqrt(x * x + p.eps);
  if (r <= p.lambda) return p.lambda * x / r;
  if (r < p.gamma * p.lambda) {
    return (p.gamma * p.lambda * x / r - x) / (p.gamma - 1.0);
  }
  return 0.0;
}

double scad_second(double x, const ScadParams& p) {
  const double r2 = x * x + p.eps;
  const double r = std::sqrt(r2);
  if (r <= p.lambda) return p.lambda * p.eps / (r2 * r);
  if (r < p.gamma * p.lambda) {
    return (p.gamma * p.lambda * p.eps / (r2 * r) - 1.0) / (p.gamma - 1.0);
  }
  return 0.0;
}

FiniteSumProblem build_scad_ls(const Matrix& A, const Vector& b,
                               const ScadParams& p) {
  p.validate();
  if (A.rows() != b.size()) {
    throw std::invalid_argument("build_scad_ls: rows of A must match length of b");
  }
  if (A.rows() == 0) throw std::invalid_argument("build_scad_ls: empty data");
  if (!(p.rho > 0.0)) {
    throw std::invalid_argument(
        "build_scad_ls: rho = 0 gives a zero lower-curvature constant; "
        "set rho > 0");
  }

  FiniteSumProblem prob;
  const Eigen::Index n = A.cols();
  double max_row_sq = 0.0;
  prob.components.reserve(static_cast<std::size_t>(A.rows()));
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    Vector a = A.row(i).transpose();
    max_row_sq = std::max(max_row_sq, a.squaredNorm());
    const double bi = b[i];
    const ScadParams params = p;
    ComponentOracle c;
    c.dimension = n;
    c.value = [a, bi, params](const Vector& x) {
      const double resid = a.dot(x) - bi;
      double pen = 0.0;
      for (Eigen::Index j = 0; j < x.size(); ++j) pen += scad_value(x[j], params);
      return 0.5 * resid * resid + 0.5 * params.rho * pen;
    };
    c.gradient = [a, bi, params](const Vector& x) {
      const double resid = a.dot(x) - bi;
      Vector g = resid * a;
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        g[j] += 0.5 * params.rho * scad_grad(x[j], params);
      }
      return g;
    };
    prob.components.push_back(std::move(c));
  }
  prob.set = FeasibleSet::whole_space();
  prob.mu = p.rho / (2.0 * (p.gamma - 1.0));
  prob.L = p.rho * p.lambda / (2.0 * std::sqrt(p.eps)) + max_row_sq;
  prob.validate();
  return prob;
}

double scad_scalar_prox(double lin, double quad, double center,
                        const ScadParams& p, double tol) {
  p.validate();
  const double weak = p.rho / (2.0 * (p.gamma - 1.0));
  if (!(quad > weak)) {
    throw std::invalid_argument(
        "scad_scalar_prox: quad must exceed rho/(2(gamma-1)) for strong convexity");
  }
  const auto deriv = [&](double x) {
    return 0.5 * p.rho * scad_grad(x, p) + lin + quad * (x - center);
  };
  const auto second = [&](double x) {
    return 0.5 * p.rho * scad_second(x, p) + quad;
  };

  // Bracket from strong convexity plus the bounded penalty slope.
  const double bound = std::abs(center) + std::abs(lin) / (quad - weak) +
                       p.rho * p.gamma * p.lambda;
  double lo = -bound, hi = bound;
  double x = std::clamp(center - lin / quad, lo, hi);

  for (int it = 0; it < 100; ++it) {
    const double d = deriv(x);
    if (std::abs(d) <= tol * (1.0 + std::abs(x))) return x;
    if (d > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    const double h = second(x);
    double next = x - d / h;
    // The second derivative jumps at branch seams; fall back to bisection
    // whenever Newton leaves the current sign bracket.
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  const double d = deriv(x);
  if (std::abs(d) <= tol * (1.0 + std::abs(x))) return x;
  throw std::runtime_error("scad_scalar_prox: tolerance not reached in 100 iterations");
}

}  // namespace rapopt
