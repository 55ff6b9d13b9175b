#ifndef RAPOPT_SCAD_HPP
#define RAPOPT_SCAD_HPP

#include "rapopt/problems.hpp"

namespace rapopt {

// Parameters of the smoothed SCAD penalty: |x| is replaced by
// r = sqrt(x^2 + eps) and the penalty is piecewise in r with knots at
// lambda and gamma*lambda. rho is the weight applied as rho/2 in the
// penalized least-squares objective.
struct ScadParams {
  double lambda = 2.0;
  double gamma = 4.0;
  double eps = 1e-3;
  double rho = 0.01;

  void validate() const;
};

// Smoothed SCAD penalty value. Total function, even in x, constant for
// r >= gamma*lambda.
double scad_value(double x, const ScadParams& p);

// Exact derivative of scad_value; continuous across both branch seams.
double scad_grad(double x, const ScadParams& p);

// Second derivative; piecewise-defined, bounded below by -1/(gamma-1) and
// above by lambda/sqrt(eps).
double scad_second(double x, const ScadParams& p);

// Penalized least squares as a finite sum:
//   f_i(x) = 1/2 (a_i^T x - b_i)^2 + rho/2 * sum_j p(x_j),
// with mu = rho / (2(gamma-1)) and L = rho*lambda/(2*sqrt(eps)) + max ||a_i||^2.
FiniteSumProblem build_scad_ls(const Matrix& A, const Vector& b,
                               const ScadParams& p);

// Minimizes q(x) = (rho/2) p(x) + lin*x + (quad/2)(x - center)^2 by
// safeguarded Newton with bisection fallback. Requires
// quad > rho/(2(gamma-1)) so q is strongly convex. Stops when
// |q'(x)| <= tol * (1 + |x|); throws after 100 iterations.
double scad_scalar_prox(double lin, double quad, double center,
                        const ScadParams& p, double tol = 1e-12);

}  // namespace rapopt

#endif
