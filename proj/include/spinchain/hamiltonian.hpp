#pragma once

#include <Eigen/Dense>
#include <vector>

#include "spinchain/chain.hpp"

// Hamiltonian assembly.  Two forms are provided:
//
//  * build_hamiltonian(): explicit dense Hermitian matrix, intended for small
//    chains and reference computations;
//  * ChainHamiltonian: a matrix-free operator that applies H to vectors in
//    O(dim) memory, used by the iterative eigensolver for large chains.
//
// Both are assembled from the same per-site and per-bond term matrices, so
// they agree to rounding error (tested).  site_fields are total fields in T
// in the crystal frame, one per site (external + tip already summed; see
// geometry module).

namespace spinchain {

// Dense Hermitian H.  Throws std::invalid_argument on field-count mismatch,
// non-finite entries, or a Hilbert dimension too large for a dense matrix.
Eigen::MatrixXcd build_hamiltonian(const ChainSpec& chain,
                                   const std::vector<Eigen::Vector3d>& site_fields_T);

// Matrix-free application of the same operator.
class ChainHamiltonian {
public:
  ChainHamiltonian(const ChainSpec& chain,
                   const std::vector<Eigen::Vector3d>& site_fields_T);

  Eigen::Index dim() const { return dim_; }
  const std::vector<int>& site_dims() const { return dims_; }
  const ChainSpec& chain() const { return chain_; }

  // True when every term matrix is real in the S_z product basis (the case
  // whenever no site sees a y field component); enables the ~4x faster real
  // Lanczos path.
  bool is_real() const { return real_; }

  // Y = H X (block of column vectors).  Y is overwritten, X and Y must not
  // alias.  The real overload requires is_real().
  void apply(const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y) const;
  void apply(const Eigen::Ref<const Eigen::MatrixXcd>& x, Eigen::Ref<Eigen::MatrixXcd> y) const;

  // Cheap upper bound on ||H||_2 (sum of term norms); used for tolerance
  // scaling in the eigensolver.
  double norm_bound() const { return norm_bound_; }

  // Dense matrix assembled from the same terms (small dims only).
  Eigen::MatrixXcd dense() const;

private:
  ChainSpec chain_;
  std::vector<int> dims_;
  Eigen::Index dim_ = 0;
  bool real_ = true;
  double norm_bound_ = 0.0;
  // One local term per site (Zeeman + anisotropy), one per bond (exchange);
  // real and complex copies so either apply path avoids conversions.
  std::vector<Eigen::MatrixXcd> site_terms_, bond_terms_;
  std::vector<Eigen::MatrixXd> site_terms_re_, bond_terms_re_;

  template <class Scalar>
  void apply_impl(const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& x,
                  Eigen::Ref<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> y) const;
};

// Local term matrices (exposed for tests and for observables built on the
// same embedding conventions).
Eigen::MatrixXcd site_term_matrix(const SiteParams& site, const Eigen::Vector3d& field_T);
Eigen::MatrixXcd bond_term_matrix(double spin_a, double spin_b, double j_mev);

// Applies a single-site operator to a block of chain-basis vectors without
// forming the embedded matrix: y = (I (x) op (x) I) x.
void apply_site_operator(const Eigen::MatrixXcd& op, int site, const std::vector<int>& dims,
                         const Eigen::Ref<const Eigen::MatrixXcd>& x,
                         Eigen::Ref<Eigen::MatrixXcd> y);

} // namespace spinchain
