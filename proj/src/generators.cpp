#include "rapopt/generators.hpp"

#include <algorithm>
#include <stdexcept>

#include "rapopt/rng.hpp"

namespace rapopt {

void GenSpec::validate() const {
  if (family != "scad-ls" && family != "compressed-sensing") {
    throw std::invalid_argument("gen spec: unknown family '" + family + "'");
  }
  if (m < 1 || n < 1) throw std::invalid_argument("gen spec: m and n must be >= 1");
  if (family == "compressed-sensing") {
    if (m < 2) throw std::invalid_argument("gen spec: compressed sensing needs m >= 2");
    if (block_dim < 1) throw std::invalid_argument("gen spec: block_dim must be >= 1");
    if (!(sparsity > 0.0) || sparsity > 1.0) {
      throw std::invalid_argument("gen spec: sparsity must lie in (0, 1]");
    }
  }
  const long long total =
      family == "scad-ls" ? n : (m - 1) * block_dim + n;
  if (nnz_signal < 0 || nnz_signal > total) {
    throw std::invalid_argument("gen spec: nnz_signal exceeds the signal dimension");
  }
  scad.validate();
  if (!(penalty_weight > 0.0)) {
    throw std::invalid_argument("gen spec: penalty weight must be > 0");
  }
}

namespace {

// First `count` positions of a partial Fisher-Yates shuffle of [0, total).
std::vector<long long> sample_positions(long long total, long long count,
                                        Pcg64& rng) {
  std::vector<long long> idx(static_cast<std::size_t>(total));
  for (long long i = 0; i < total; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (long long i = 0; i < count; ++i) {
    const long long j = i + static_cast<long long>(rng.bounded(
                                static_cast<std::uint64_t>(total - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

Vector sparse_signal(long long total, long long count, Pcg64& rng) {
  Vector x = Vector::Zero(total);
  const auto positions = sample_positions(total, count, rng);
  for (const long long pos : positions) {
    x[static_cast<Eigen::Index>(pos)] = rng.normal();
  }
  return x;
}

}  // namespace

ScadLsInstance gen_scad_ls(const GenSpec& spec) {
  spec.validate();
  if (spec.family != "scad-ls") {
    throw std::invalid_argument("gen_scad_ls: spec family mismatch");
  }
  Pcg64 rng(spec.seed);
  ScadLsInstance inst;
  inst.spec = spec;
  inst.A.resize(spec.m, spec.n);
  for (Eigen::Index i = 0; i < inst.A.rows(); ++i) {
    for (Eigen::Index j = 0; j < inst.A.cols(); ++j) {
      inst.A(i, j) = rng.normal();
    }
  }
  inst.xhat = sparse_signal(spec.n, spec.nnz_signal, rng);
  inst.b = inst.A * inst.xhat;
  inst.problem = build_scad_ls(inst.A, inst.b, spec.scad);
  return inst;
}

BlockProxFactory scad_block_prox_factory(const MultiBlockProblem& p,
                                         ScadParams params, double weight) {
  // The scalar kernel minimizes (rho/2) p(x) + ..., so a weight w enters as
  // rho = 2w. The two quadratic terms collapse into one. Sets and dims are
  // captured by value so the factory survives copies of the problem.
  ScadParams prox_params = params;
  prox_params.rho = 2.0 * weight;
  std::vector<FeasibleSet> sets;
  sets.reserve(p.blocks.size());
  for (const auto& blk : p.blocks) sets.push_back(blk.set);
  return [sets, prox_params](const std::vector<Vector>& centers,
                             double mu) -> BlockProx {
    return [sets, prox_params, centers, mu](int i, const Vector& linear,
                                            double eta,
                                            const Vector& x_ref) -> Vector {
      const FeasibleSet& set = sets[static_cast<std::size_t>(i)];
      const Vector& center = centers[static_cast<std::size_t>(i)];
      Vector out(x_ref.size());
      const double quad = 2.0 * mu + eta;
      for (Eigen::Index j = 0; j < x_ref.size(); ++j) {
        const double combined_center =
            (2.0 * mu * center[j] + eta * x_ref[j]) / quad;
        double xj = scad_scalar_prox(linear[j], quad, combined_center,
                                     prox_params);
        if (!set.is_whole_space()) {
          // Scalar convex objective: the constrained minimizer is the clamp
          // of the unconstrained one.
          xj = std::clamp(xj, set.lower()[j], set.upper()[j]);
        }
        out[j] = xj;
      }
      return out;
    };
  };
}

CompressedSensingInstance gen_compressed_sensing(const GenSpec& spec) {
  spec.validate();
  if (spec.family != "compressed-sensing") {
    throw std::invalid_argument("gen_compressed_sensing: spec family mismatch");
  }
  Pcg64 rng(spec.seed);
  CompressedSensingInstance inst;
  inst.spec = spec;

  const long long blocks = spec.m - 1;
  const ScadParams scad = spec.scad;
  const double w = spec.penalty_weight;

  MultiBlockProblem& p = inst.problem;
  p.blocks.reserve(static_cast<std::size_t>(blocks));
  for (long long i = 0; i < blocks; ++i) {
    BlockSpec blk;
    blk.dim = spec.block_dim;
    blk.set = FeasibleSet::whole_space();
    blk.A.resize(spec.n, spec.block_dim);
    for (Eigen::Index col = 0; col < blk.A.cols(); ++col) {
      bool nonzero = false;
      while (!nonzero) {
        for (Eigen::Index row = 0; row < blk.A.rows(); ++row) {
          const bool hit = rng.uniform01() < spec.sparsity;
          blk.A(row, col) = hit ? rng.normal() : 0.0;
          nonzero = nonzero || hit;
        }
        if (!nonzero) inst.redrawn_columns += 1;
      }
    }
    ComponentOracle oracle;
    oracle.dimension = spec.block_dim;
    oracle.value = [scad, w](const Vector& x) {
      double sum = 0.0;
      for (Eigen::Index j = 0; j < x.size(); ++j) sum += scad_value(x[j], scad);
      return w * sum;
    };
    oracle.gradient = [scad, w](const Vector& x) {
      Vector g(x.size());
      for (Eigen::Index j = 0; j < x.size(); ++j) g[j] = w * scad_grad(x[j], scad);
      return g;
    };
    blk.oracle = std::move(oracle);
    p.blocks.push_back(std::move(blk));
  }

  p.A_m = Matrix::Identity(spec.n, spec.n);
  ComponentOracle last;
  last.dimension = spec.n;
  last.value = [scad, w](const Vector& x) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) sum += scad_value(x[j], scad);
    return w * sum;
  };
  last.gradient = [scad, w](const Vector& x) {
    Vector g(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) g[j] = w * scad_grad(x[j], scad);
    return g;
  };
  p.last_oracle = std::move(last);

  // Penalty curvature bounds give the problem constants: the largest second
  // derivative is lambda/sqrt(eps), the most negative is -1/(gamma-1).
  p.mu = w / (scad.gamma - 1.0);
  p.L = w * scad.lambda / std::sqrt(scad.eps);
  p.block_prox = scad_block_prox_factory(p, scad, w);

  const long long total = blocks * spec.block_dim + spec.n;
  inst.xhat = sparse_signal(total, spec.nnz_signal, rng);
  Vector b = Vector::Zero(spec.n);
  for (long long i = 0; i < blocks; ++i) {
    b += p.blocks[static_cast<std::size_t>(i)].A *
         inst.xhat.segment(i * spec.block_dim, spec.block_dim);
  }
  b += inst.xhat.tail(spec.n);  // identity last block
  p.b = b;
  inst.b = b;
  p.validate();
  return inst;
}

std::vector<Vector> CompressedSensingInstance::split_blocks(
    const Vector& stacked) const {
  const long long blocks = spec.m - 1;
  std::vector<Vector> out(static_cast<std::size_t>(blocks));
  for (long long i = 0; i < blocks; ++i) {
    out[static_cast<std::size_t>(i)] =
        stacked.segment(i * spec.block_dim, spec.block_dim);
  }
  return out;
}

}  // namespace rapopt
