#ifndef RAPOPT_GENERATORS_HPP
#define RAPOPT_GENERATORS_HPP

#include <cstdint>
#include <string>

#include "rapopt/problems.hpp"
#include "rapopt/scad.hpp"

namespace rapopt {

// Seeded description of a random test instance. The tuple
// (family, sizes, seed) determines the instance bit-for-bit.
struct GenSpec {
  std::string family;  // "scad-ls" or "compressed-sensing"
  long long m = 0;
  long long n = 0;
  long long block_dim = 1;     // compressed sensing block width
  double sparsity = 0.1;       // Bernoulli density of block matrices
  long long nnz_signal = 20;   // nonzeros planted in the ground truth
  std::uint64_t seed = 0;
  ScadParams scad;             // defaults: lambda 2, gamma 4, eps 1e-3, rho 0.01
  double penalty_weight = 1.0; // multi-block penalty weight

  void validate() const;
};

struct ScadLsInstance {
  FiniteSumProblem problem;
  Matrix A;
  Vector b;
  Vector xhat;  // planted sparse signal, b = A xhat exactly
  GenSpec spec;
};

struct CompressedSensingInstance {
  MultiBlockProblem problem;
  Vector b;
  Vector xhat;  // all block signals stacked, last block included
  GenSpec spec;
  long long redrawn_columns = 0;  // all-zero columns redrawn during sampling

  std::vector<Vector> split_blocks(const Vector& stacked) const;
};

// Dense Gaussian design, sparse Gaussian signal, consistent right-hand side,
// penalized least-squares problem with the derived constants.
ScadLsInstance gen_scad_ls(const GenSpec& spec);

// Sparse Gaussian blocks, identity last block, separable smoothed-SCAD
// objective on every block; block prox wired to the exact scalar solver.
CompressedSensingInstance gen_compressed_sensing(const GenSpec& spec);

// Per-coordinate exact prox for separable smoothed-SCAD blocks of weight w.
BlockProxFactory scad_block_prox_factory(const MultiBlockProblem& p,
                                         ScadParams params, double weight);

}  // namespace rapopt

#endif
