#include "spinchain/hamiltonian.hpp"

#include <cmath>
#include <stdexcept>

#include "spinchain/constants.hpp"
#include "spinchain/errors.hpp"
#include "spinchain/spin_ops.hpp"

namespace spinchain {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::Vector3d;

namespace {

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
  MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// y += (I_left (x) A (x) I_right) x, one column at a time.  The chain basis
// is laid out with site 0 slowest, so for fixed left index l the slab
// x[l*d*right ... ] is a row-major (d x right) block, i.e. a column-major
// (right x d) matrix; the contraction is then a plain GEMM with A^T.
template <class Scalar>
void accumulate_term(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a,
                     Index left, Index d, Index right,
                     const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& x,
                     Eigen::Ref<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> y) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  for (Index col = 0; col < x.cols(); ++col) {
    const Scalar* xp = x.col(col).data();
    Scalar* yp = const_cast<Scalar*>(y.col(col).data());
    if (right == 1) {
      // Slabs degenerate to contiguous length-d runs: one (d x left) GEMM.
      Eigen::Map<const Mat> xm(xp, d, left);
      Eigen::Map<Mat> ym(yp, d, left);
      ym.noalias() += a * xm;
    } else {
      for (Index l = 0; l < left; ++l) {
        Eigen::Map<const Mat> xm(xp + l * d * right, right, d);
        Eigen::Map<Mat> ym(yp + l * d * right, right, d);
        ym.noalias() += xm * a.transpose();
      }
    }
  }
}

} // namespace

MatrixXcd site_term_matrix(const SiteParams& site, const Vector3d& field_T) {
  if (!field_T.allFinite()) throw std::invalid_argument("non-finite site field");
  const SpinMatrices s = spin_matrices(site.spin);
  const double zeeman = site.g * constants::mu_B;
  return zeeman * (field_T.x() * s.sx + field_T.y() * s.sy + field_T.z() * s.sz) +
         site.d_mev * s.sz * s.sz + site.e_mev * (s.sx * s.sx - s.sy * s.sy);
}

MatrixXcd bond_term_matrix(double spin_a, double spin_b, double j_mev) {
  const SpinMatrices a = spin_matrices(spin_a);
  const SpinMatrices b = spin_matrices(spin_b);
  return j_mev * (kron(a.sx, b.sx) + kron(a.sy, b.sy) + kron(a.sz, b.sz));
}

ChainHamiltonian::ChainHamiltonian(const ChainSpec& chain,
                                   const std::vector<Vector3d>& site_fields_T)
    : chain_(chain) {
  chain_.validate();
  if (static_cast<int>(site_fields_T.size()) != chain_.n_sites())
    throw std::invalid_argument("need one field vector per site");
  dims_ = chain_.site_dims();
  dim_ = 1;
  for (int d : dims_) dim_ *= d;

  double imag_max = 0.0, scale = 0.0;
  for (int i = 0; i < chain_.n_sites(); ++i) {
    MatrixXcd term = site_term_matrix(chain_.sites[static_cast<std::size_t>(i)],
                                      site_fields_T[static_cast<std::size_t>(i)]);
    imag_max = std::max(imag_max, term.imag().cwiseAbs().maxCoeff());
    scale = std::max(scale, term.cwiseAbs().maxCoeff());
    norm_bound_ += term.norm();
    site_terms_.push_back(std::move(term));
  }
  for (int i = 0; i + 1 < chain_.n_sites(); ++i) {
    MatrixXcd term = bond_term_matrix(chain_.sites[static_cast<std::size_t>(i)].spin,
                                      chain_.sites[static_cast<std::size_t>(i) + 1].spin,
                                      chain_.couplings_mev[static_cast<std::size_t>(i)]);
    imag_max = std::max(imag_max, term.imag().cwiseAbs().maxCoeff());
    scale = std::max(scale, term.cwiseAbs().maxCoeff());
    norm_bound_ += term.norm();
    bond_terms_.push_back(std::move(term));
  }
  real_ = imag_max <= 1e-14 * std::max(1.0, scale);
  if (real_) {
    for (const auto& t : site_terms_) site_terms_re_.push_back(t.real());
    for (const auto& t : bond_terms_) bond_terms_re_.push_back(t.real());
  }
}

template <class Scalar>
void ChainHamiltonian::apply_impl(
    const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& x,
    Eigen::Ref<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> y) const {
  if (x.rows() != dim_ || y.rows() != dim_ || x.cols() != y.cols())
    throw std::invalid_argument("operand dimension mismatch in Hamiltonian apply");
  y.setZero();
  const int n = chain_.n_sites();
  std::vector<Index> stride_after(static_cast<std::size_t>(n) + 1, 1);
  for (int i = n - 1; i >= 0; --i)
    stride_after[static_cast<std::size_t>(i)] =
        stride_after[static_cast<std::size_t>(i) + 1] * dims_[static_cast<std::size_t>(i)];

  const auto term = [&](int i, bool bond) -> const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& {
    if constexpr (std::is_same_v<Scalar, double>) {
      return bond ? bond_terms_re_[static_cast<std::size_t>(i)]
                  : site_terms_re_[static_cast<std::size_t>(i)];
    } else {
      return bond ? bond_terms_[static_cast<std::size_t>(i)]
                  : site_terms_[static_cast<std::size_t>(i)];
    }
  };

  for (int i = 0; i < n; ++i) {
    const Index d = dims_[static_cast<std::size_t>(i)];
    const Index right = stride_after[static_cast<std::size_t>(i) + 1];
    accumulate_term<Scalar>(term(i, false), dim_ / (d * right), d, right, x, y);
  }
  for (int i = 0; i + 1 < n; ++i) {
    const Index d = static_cast<Index>(dims_[static_cast<std::size_t>(i)]) *
                    dims_[static_cast<std::size_t>(i) + 1];
    const Index right = stride_after[static_cast<std::size_t>(i) + 2];
    accumulate_term<Scalar>(term(i, true), dim_ / (d * right), d, right, x, y);
  }
}

void ChainHamiltonian::apply(const Eigen::Ref<const MatrixXd>& x, Eigen::Ref<MatrixXd> y) const {
  if (!real_) throw InternalError("real apply requested for a complex Hamiltonian");
  apply_impl<double>(x, y);
}

void ChainHamiltonian::apply(const Eigen::Ref<const MatrixXcd>& x, Eigen::Ref<MatrixXcd> y) const {
  apply_impl<std::complex<double>>(x, y);
}

MatrixXcd ChainHamiltonian::dense() const {
  constexpr Index dense_dim_cap = 4096;
  if (dim_ > dense_dim_cap)
    throw std::invalid_argument("Hilbert dimension " + std::to_string(dim_) +
                                " too large for a dense matrix (cap " +
                                std::to_string(dense_dim_cap) + "); use the matrix-free path");
  MatrixXcd x = MatrixXcd::Identity(dim_, dim_), h(dim_, dim_);
  apply_impl<std::complex<double>>(x, h);
  return h;
}

MatrixXcd build_hamiltonian(const ChainSpec& chain, const std::vector<Vector3d>& site_fields_T) {
  return ChainHamiltonian(chain, site_fields_T).dense();
}

void apply_site_operator(const MatrixXcd& op, int site, const std::vector<int>& dims,
                         const Eigen::Ref<const MatrixXcd>& x, Eigen::Ref<MatrixXcd> y) {
  if (site < 0 || site >= static_cast<int>(dims.size()))
    throw std::invalid_argument("site index out of range");
  Index left = 1, right = 1;
  for (int i = 0; i < site; ++i) left *= dims[static_cast<std::size_t>(i)];
  for (std::size_t i = static_cast<std::size_t>(site) + 1; i < dims.size(); ++i) right *= dims[i];
  const Index d = dims[static_cast<std::size_t>(site)];
  if (op.rows() != d || op.cols() != d)
    throw std::invalid_argument("operator dimension does not match the site's 2S+1");
  if (x.rows() != left * d * right || y.rows() != x.rows() || y.cols() != x.cols())
    throw std::invalid_argument("operand dimension mismatch in site-operator apply");
  y.setZero();
  accumulate_term<std::complex<double>>(op, left, d, right, x, y);
}

} // namespace spinchain
