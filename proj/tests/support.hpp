#ifndef RAPOPT_TESTS_SUPPORT_HPP
#define RAPOPT_TESTS_SUPPORT_HPP

#include <Eigen/Dense>
#include <vector>

#include "rapopt/problems.hpp"
#include "rapopt/rng.hpp"

namespace rapopt::testing {

// f(x) = 1/2 x^T Q x + b^T x with symmetric Q.
inline ComponentOracle quadratic_oracle(const Matrix& Q, const Vector& b) {
  ComponentOracle c;
  c.dimension = Q.rows();
  c.value = [Q, b](const Vector& x) { return 0.5 * x.dot(Q * x) + b.dot(x); };
  c.gradient = [Q, b](const Vector& x) { return (Q * x + b).eval(); };
  return c;
}

// Symmetric PSD matrix with eigenvalues drawn uniformly from [lo, hi].
inline Matrix random_psd(Eigen::Index n, double lo, double hi, Pcg64& rng) {
  Matrix G(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) G(i, j) = rng.normal();
  }
  const Eigen::HouseholderQR<Matrix> qr(G);
  Matrix U = qr.householderQ();
  Vector eig(n);
  for (Eigen::Index i = 0; i < n; ++i) eig[i] = lo + (hi - lo) * rng.uniform01();
  return U * eig.asDiagonal() * U.transpose();
}

inline Vector random_vector(Eigen::Index n, Pcg64& rng, double scale = 1.0) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

// Convex quadratic finite sum with component curvatures inside [lo, hi];
// the stated constants are L = hi and mu = hi / cond.
inline FiniteSumProblem random_quadratic_sum(long long m, Eigen::Index n,
                                             double lo, double hi, double cond,
                                             Pcg64& rng) {
  FiniteSumProblem p;
  p.components.reserve(static_cast<std::size_t>(m));
  for (long long i = 0; i < m; ++i) {
    p.components.push_back(
        quadratic_oracle(random_psd(n, lo, hi, rng), random_vector(n, rng)));
  }
  p.set = FeasibleSet::whole_space();
  p.L = hi;
  p.mu = hi / cond;
  return p;
}

// Exact minimizer of (1/m) sum f_i + (w/2)||x - z||^2 for quadratic f_i.
inline Vector quadratic_prox_solution(const FiniteSumProblem& p,
                                      const std::vector<Matrix>& Q,
                                      const std::vector<Vector>& b,
                                      double w, const Vector& z) {
  const Eigen::Index n = z.size();
  Matrix H = w * Matrix::Identity(n, n);
  Vector rhs = w * z;
  const double inv_m = 1.0 / static_cast<double>(p.m());
  for (std::size_t i = 0; i < Q.size(); ++i) {
    H += inv_m * Q[i];
    rhs -= inv_m * b[i];
  }
  return H.ldlt().solve(rhs);
}

}  // namespace rapopt::testing

#endif
