#include "rapopt/problems.hpp"

#include <Eigen/LU>
#include <cmath>
#include <stdexcept>

namespace rapopt {

void check_finite(const Vector& x, const char* what) {
  if (!x.allFinite()) {
    throw std::invalid_argument(std::string(what) +
                                ": vector has non-finite entries");
  }
}

FeasibleSet FeasibleSet::whole_space() {
  FeasibleSet s;
  s.kind_ = Kind::kWholeSpace;
  return s;
}

FeasibleSet FeasibleSet::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size()) {
    throw std::invalid_argument("box: bound dimensions differ");
  }
  if ((lower.array() > upper.array()).any()) {
    throw std::invalid_argument("box: lower bound exceeds upper bound");
  }
  FeasibleSet s;
  s.kind_ = Kind::kBox;
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

Vector FeasibleSet::project(const Vector& x) const {
  check_finite(x, "project");
  if (kind_ == Kind::kWholeSpace) return x;
  if (x.size() != lower_.size()) {
    throw std::invalid_argument("project: dimension mismatch with box");
  }
  return x.cwiseMax(lower_).cwiseMin(upper_);
}

double FeasibleSet::violation(const Vector& x) const {
  if (kind_ == Kind::kWholeSpace) return 0.0;
  const double below = (lower_ - x).cwiseMax(0.0).maxCoeff();
  const double above = (x - upper_).cwiseMax(0.0).maxCoeff();
  return std::max(below, above);
}

bool FeasibleSet::contains(const Vector& x, double tol) const {
  return violation(x) <= tol;
}

void FiniteSumProblem::validate() const {
  if (components.empty()) {
    throw std::invalid_argument("finite-sum problem: needs at least one component");
  }
  if (!(mu > 0.0) || !(mu <= L)) {
    throw std::invalid_argument(
        "finite-sum problem: requires 0 < mu <= L (got mu=" +
        std::to_string(mu) + ", L=" + std::to_string(L) + ")");
  }
  const Eigen::Index n = components.front().dimension;
  for (const auto& c : components) {
    if (c.dimension != n) {
      throw std::invalid_argument("finite-sum problem: components disagree on dimension");
    }
  }
}

void MultiBlockProblem::validate() const {
  if (blocks.empty()) {
    throw std::invalid_argument("multi-block problem: needs at least one leading block");
  }
  if (!(mu > 0.0) || !(mu <= L)) {
    throw std::invalid_argument("multi-block problem: requires 0 < mu <= L");
  }
  const Eigen::Index nn = b.size();
  if (A_m.rows() != nn || A_m.cols() != nn) {
    throw std::invalid_argument("multi-block problem: A_m must be square n x n");
  }
  if (last_oracle.dimension != nn) {
    throw std::invalid_argument("multi-block problem: last oracle dimension != n");
  }
  for (const auto& blk : blocks) {
    if (blk.oracle.dimension != blk.dim) {
      throw std::invalid_argument("multi-block problem: block oracle dimension mismatch");
    }
    if (blk.A.rows() != nn || blk.A.cols() != blk.dim) {
      throw std::invalid_argument("multi-block problem: block matrix shape mismatch");
    }
  }
}

double full_objective(const FiniteSumProblem& p, const Vector& x,
                      EvalCounters* counters) {
  check_finite(x, "full_objective");
  if (x.size() != p.dimension()) {
    throw std::invalid_argument("full_objective: dimension mismatch");
  }
  double sum = 0.0;
  for (const auto& c : p.components) sum += c.value(x);
  if (counters) counters->component_value_evals += p.m();
  return sum / static_cast<double>(p.m());
}

Vector full_gradient(const FiniteSumProblem& p, const Vector& x,
                     EvalCounters* counters) {
  check_finite(x, "full_gradient");
  if (x.size() != p.dimension()) {
    throw std::invalid_argument("full_gradient: dimension mismatch");
  }
  Vector g = Vector::Zero(x.size());
  for (const auto& c : p.components) g += c.gradient(x);
  if (counters) counters->component_grad_evals += p.m();
  return g / static_cast<double>(p.m());
}

Vector project(const FeasibleSet& set, const Vector& x) {
  return set.project(x);
}

double spectral_norm(const Matrix& A, int max_iter, double tol) {
  if (A.size() == 0) return 0.0;
  if (A.cols() == 1) return A.col(0).norm();
  if (A.rows() == 1) return A.row(0).norm();

  // Power iteration on A^T A with a deterministic pseudo-random start so
  // results are reproducible.
  Pcg64 rng(0x5eedULL + static_cast<std::uint64_t>(A.rows()) * 131 +
            static_cast<std::uint64_t>(A.cols()));
  Vector v(A.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  double nv = v.norm();
  if (nv == 0.0) v.setOnes(), nv = v.norm();
  v /= nv;

  double sigma_sq = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector w = A.transpose() * (A * v);
    const double new_sigma_sq = v.dot(w);
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;  // v in the null space and A^T A v = 0
    v = w / wn;
    if (it > 0 && std::abs(new_sigma_sq - sigma_sq) <=
                      tol * std::max(new_sigma_sq, 1e-300)) {
      sigma_sq = new_sigma_sq;
      break;
    }
    sigma_sq = new_sigma_sq;
  }
  return std::sqrt(std::max(sigma_sq, 0.0));
}

ReformulatedProblem reformulate(const MultiBlockProblem& p) {
  p.validate();
  Eigen::PartialPivLU<Matrix> lu(p.A_m);
  // A zero pivot makes the 1-norm estimate meaningless, so test it first.
  const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  const double rcond = min_pivot == 0.0 ? 0.0 : lu.rcond();
  if (!(rcond >= 1e-12)) {
    throw std::runtime_error(
        "reformulate: A_m is singular or near-singular (rcond=" +
        std::to_string(rcond) + ", threshold 1e-12)");
  }
  ReformulatedProblem rp;
  rp.problem = p;
  rp.A.reserve(p.blocks.size());
  rp.bvec = lu.solve(p.b);
  double max_norm = 0.0;
  double sum_sq = 0.0;
  for (const auto& blk : p.blocks) {
    Matrix Ai = lu.solve(blk.A);
    const double nrm = spectral_norm(Ai);
    max_norm = std::max(max_norm, nrm);
    sum_sq += nrm * nrm;
    rp.A.push_back(std::move(Ai));
  }
  rp.abar = max_norm;
  rp.anorm2 = sum_sq;
  return rp;
}

Vector ReformulatedProblem::apply(const std::vector<Vector>& x) const {
  Vector out = Vector::Zero(problem.n());
  for (std::size_t i = 0; i < A.size(); ++i) out += A[i] * x[i];
  return out;
}

double max_grad_fd_error(const ComponentOracle& oracle, int probes, Pcg64& rng,
                         double x_scale, double step) {
  double worst = 0.0;
  for (int k = 0; k < probes; ++k) {
    Vector x(oracle.dimension);
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = x_scale * rng.normal();
    const Vector g = oracle.gradient(x);
    Vector fd(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Vector xp = x, xm = x;
      xp[i] += step;
      xm[i] -= step;
      fd[i] = (oracle.value(xp) - oracle.value(xm)) / (2.0 * step);
    }
    const double denom = std::max(g.norm(), 1.0);
    worst = std::max(worst, (g - fd).norm() / denom);
  }
  return worst;
}

}  // namespace rapopt
