#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "spinchain/chain.hpp"

// Eigendecomposition results and the amplitude truncation applied before
// rate calculations.

namespace spinchain {

struct TruncationInfo {
  Eigen::Index kept_states = 0; // states retained (lowest energies)
  Eigen::Index kept_amplitudes = 0; // largest-|amplitude| entries kept per state
};

struct Spectrum {
  Eigen::VectorXd energies_mev; // ascending
  Eigen::MatrixXcd states; // dim x n_states, column k <-> energies_mev[k]
  std::vector<int> site_dims; // product-basis structure (site 0 slowest)
  bool states_are_real = false; // true when all amplitudes have zero imaginary part
  std::optional<TruncationInfo> truncation; // set iff truncate_spectrum was applied

  Eigen::Index dim() const { return states.rows(); }
  Eigen::Index n_states() const { return states.cols(); }

  // Checks ascending energies, unit norms (1e-10) and mutual orthogonality
  // (1e-8); orthonormality checks are skipped for truncated spectra.  Throws
  // InternalError on violation.  Used by tests.
  void check_invariants() const;
};

// Deterministic gauge fix applied to every eigenvector: the largest-modulus
// amplitude (earliest index on ties within 1e-12) is rotated to be real and
// positive.
void fix_phase(Eigen::Ref<Eigen::VectorXcd> state);

// Keeps the lowest n_states states and, within each, the n_amplitudes
// largest-|amplitude| product-basis entries; zeroed states are renormalized.
// Requests exceeding what is available are clamped (reported via the
// truncation info).  Throws std::invalid_argument for n <= 0.
Spectrum truncate_spectrum(const Spectrum& spec, Eigen::Index n_states,
                           Eigen::Index n_amplitudes);

} // namespace spinchain
