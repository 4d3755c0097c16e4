#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "spinchain/hamiltonian.hpp"
#include "spinchain/spectrum.hpp"

// Eigensolvers.  Dense path: Eigen's SelfAdjointEigenSolver.  Iterative
// path: block Lanczos with full reorthogonalization and thick restarts,
// applied matrix-free; returns the lowest-k eigenpairs.  Both yield the same
// deterministic eigenvector gauge (see fix_phase).

namespace spinchain {

struct EigOptions {
  // Residual tolerances (checked on explicitly formed residual vectors) are
  // relative to a bound on ||H||.  States up to `tight_k` (default: all
  // requested) must meet `tol`; higher states only `loose_tol`.  Rate
  // calculations exploit this: thermally suppressed high states need no
  // tight convergence.
  double tol = 1e-9;
  double loose_tol = 1e-9;
  Eigen::Index tight_k = -1;

  Eigen::Index block = 4; // Krylov block size (>= 2 keeps degenerate pairs together)
  Eigen::Index max_basis = -1; // basis columns before a thick restart (-1: auto)
  int max_restarts = 60;

  // Degree of the Chebyshev filter applied to continuation blocks once the
  // first Rayleigh-Ritz pass has localized the wanted window (<= 1, the
  // default, disables it).  Off by default: with a basis cap tall enough to
  // avoid restarts the plain recurrence converges in fewer seconds, and
  // degrees above ~3 align the block columns with the filter's dominant
  // directions until appends degenerate into cancellation noise.  Kept as an
  // escape hatch for memory-capped runs, where mild filtering (2-3) trades
  // matrix applications for basis columns.
  int filter_degree = 1;
  std::uint64_t seed = 0x5eedc0de5eedc0deull; // deterministic start block

  // Dimension at or below which diagonalize(op, k) uses the dense path.
  Eigen::Index dense_cutoff = 256;
};

// Dense full (or lowest-k) decomposition of an explicit Hermitian matrix.
// Throws std::invalid_argument if H is not square/Hermitian (1e-10 scaled) or
// k is out of range.
Spectrum diagonalize(const Eigen::MatrixXcd& h,
                     std::optional<Eigen::Index> k = std::nullopt,
                     const std::vector<int>& site_dims = {});

// Lowest-k eigenpairs of a matrix-free operator.  Picks the dense path for
// small dimensions or k close to dim, block Lanczos otherwise.  Throws
// NumericalError if the requested accuracy is not reached.
Spectrum diagonalize(const ChainHamiltonian& op, Eigen::Index k,
                     const EigOptions& opts = {});

// Same, but seeds the iteration with `warm_start` (column vectors, e.g.
// `states` of a previously solved nearby Hamiltonian).  Results are identical
// to a cold solve within the requested tolerances; only the work to get there
// shrinks.  Throws std::invalid_argument on a dimension mismatch.
Spectrum diagonalize(const ChainHamiltonian& op, Eigen::Index k, const EigOptions& opts,
                     const Eigen::MatrixXcd& warm_start);

} // namespace spinchain
