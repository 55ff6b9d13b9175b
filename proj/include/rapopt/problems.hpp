#ifndef RAPOPT_PROBLEMS_HPP
#define RAPOPT_PROBLEMS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rapopt/rng.hpp"

namespace rapopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Evaluation counters live with the run, never with the problem, so that
// problems can be shared read-only across concurrent runs.
struct EvalCounters {
  long long component_value_evals = 0;
  long long component_grad_evals = 0;
  long long block_updates = 0;
};

// One term of a finite sum: value and gradient of f_i, plus its dimension.
// A single gradient call is the unit of cost accounting.
struct ComponentOracle {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  Eigen::Index dimension = 0;
};

// Feasible sets are restricted to the whole space and axis-aligned boxes.
class FeasibleSet {
 public:
  enum class Kind { kWholeSpace, kBox };

  static FeasibleSet whole_space();
  static FeasibleSet box(Vector lower, Vector upper);

  Kind kind() const { return kind_; }
  bool is_whole_space() const { return kind_ == Kind::kWholeSpace; }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

  Vector project(const Vector& x) const;
  // Max componentwise constraint violation; 0 for the whole space.
  double violation(const Vector& x) const;
  bool contains(const Vector& x, double tol = 1e-12) const;

 private:
  FeasibleSet() = default;
  Kind kind_ = Kind::kWholeSpace;
  Vector lower_, upper_;
};

struct FiniteSumProblem {
  std::vector<ComponentOracle> components;
  FeasibleSet set = FeasibleSet::whole_space();
  double L = 0.0;   // gradient Lipschitz constant of every component
  double mu = 0.0;  // lower-curvature constant (weak convexity modulus)

  long long m() const { return static_cast<long long>(components.size()); }
  Eigen::Index dimension() const {
    return components.empty() ? 0 : components.front().dimension;
  }
  // Throws std::invalid_argument when 0 < mu <= L, m >= 1 or the shared
  // dimension is violated.
  void validate() const;
};

struct BlockSpec {
  Eigen::Index dim = 0;
  ComponentOracle oracle;  // f_i over R^{dim}
  FeasibleSet set = FeasibleSet::whole_space();
  Matrix A;  // n x dim coupling matrix
};

// Exact solver for argmin over the block set of
//   psi_i(x) + <linear, x> + (eta/2) ||x - x_ref||^2,
// where psi_i(x) = f_i(x) + mu ||x - center_i||^2 for the current centers.
using BlockProx = std::function<Vector(int block, const Vector& linear,
                                       double eta, const Vector& x_ref)>;
using BlockProxFactory = std::function<BlockProx(
    const std::vector<Vector>& centers, double mu)>;

struct MultiBlockProblem {
  std::vector<BlockSpec> blocks;  // the m-1 leading blocks
  ComponentOracle last_oracle;    // f_m over R^n (its set is the whole space)
  Matrix A_m;                     // n x n, invertible
  Vector b;
  double L = 0.0;   // gradient Lipschitz constant of f_m
  double mu = 0.0;  // shared lower-curvature constant
  // Optional exact block-update solver; a gradient-based fallback is used
  // when absent.
  BlockProxFactory block_prox;

  long long m() const { return static_cast<long long>(blocks.size()) + 1; }
  Eigen::Index n() const { return b.size(); }
  void validate() const;
};

// Multi-block data after the constraint is left-multiplied by A_m^{-1}, so
// the last block enters the constraint with an identity coefficient.
struct ReformulatedProblem {
  MultiBlockProblem problem;
  std::vector<Matrix> A;  // A_m^{-1} A_i
  Vector bvec;            // A_m^{-1} b
  double abar = 0.0;      // max_i ||A_i||
  double anorm2 = 0.0;    // sum_i ||A_i||^2

  Vector apply(const std::vector<Vector>& x) const;  // sum_i A_i x_i
};

// (1/m) sum_i f_i(x). Adds m to the value counter when one is supplied.
double full_objective(const FiniteSumProblem& p, const Vector& x,
                      EvalCounters* counters = nullptr);

// (1/m) sum_i grad f_i(x). Adds m to the gradient counter (= one pass).
Vector full_gradient(const FiniteSumProblem& p, const Vector& x,
                     EvalCounters* counters = nullptr);

// Euclidean projection; identity for the whole space, clamp for boxes.
Vector project(const FeasibleSet& set, const Vector& x);

// Largest singular value by power iteration (at most `max_iter` rounds,
// relative tolerance `tol` on the square).
double spectral_norm(const Matrix& A, int max_iter = 200, double tol = 1e-10);

// LU factorization with partial pivoting; throws std::runtime_error when the
// reciprocal condition estimate falls below 1e-12.
ReformulatedProblem reformulate(const MultiBlockProblem& p);

// Max relative error between the oracle gradient and a central finite
// difference of its value over `probes` random points near `x_scale`.
double max_grad_fd_error(const ComponentOracle& oracle, int probes,
                         Pcg64& rng, double x_scale = 1.0,
                         double step = 1e-6);

void check_finite(const Vector& x, const char* what);

}  // namespace rapopt

#endif
