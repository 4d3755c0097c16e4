#include "spinchain/spin_ops.hpp"

#include <cmath>
#include <stdexcept>

namespace spinchain {

using Eigen::MatrixXcd;
using std::complex;

SpinMatrices spin_matrices(double spin) {
  const double two_s = 2.0 * spin;
  if (!(spin > 0) || std::abs(two_s - std::round(two_s)) > 1e-9)
    throw std::invalid_argument("spin must be a positive integer or half-integer");
  const int d = static_cast<int>(std::round(two_s)) + 1;

  SpinMatrices ops;
  ops.sz = MatrixXcd::Zero(d, d);
  ops.sp = MatrixXcd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const double m = spin - i; // basis ordering m = +S ... -S
    ops.sz(i, i) = m;
    // S+|m> = sqrt(S(S+1) - m(m+1)) |m+1>, i.e. row index i-1.
    if (i > 0) ops.sp(i - 1, i) = std::sqrt(spin * (spin + 1) - m * (m + 1));
  }
  ops.sm = ops.sp.adjoint();
  ops.sx = 0.5 * (ops.sp + ops.sm);
  ops.sy = complex<double>(0, -0.5) * (ops.sp - ops.sm);
  return ops;
}

int local_index(double spin, double m) {
  const double idx = spin - m;
  if (idx < -1e-9 || idx > 2 * spin + 1e-9 || std::abs(idx - std::round(idx)) > 1e-9)
    throw std::invalid_argument("m is not a valid S_z quantum number for this spin");
  return static_cast<int>(std::round(idx));
}

MatrixXcd embed_site_operator(const MatrixXcd& op, int site, const ChainSpec& chain) {
  const auto dims = chain.site_dims();
  if (site < 0 || site >= chain.n_sites()) throw std::invalid_argument("site index out of range");
  const int d = dims[static_cast<std::size_t>(site)];
  if (op.rows() != d || op.cols() != d)
    throw std::invalid_argument("operator dimension does not match the site's 2S+1");

  std::int64_t left = 1, right = 1;
  for (int i = 0; i < site; ++i) left *= dims[static_cast<std::size_t>(i)];
  for (int i = site + 1; i < chain.n_sites(); ++i) right *= dims[static_cast<std::size_t>(i)];

  const std::int64_t dim = left * d * right;
  MatrixXcd out = MatrixXcd::Zero(dim, dim);
  for (std::int64_t l = 0; l < left; ++l)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        if (op(a, b) == complex<double>(0, 0)) continue;
        const std::int64_t row0 = (l * d + a) * right;
        const std::int64_t col0 = (l * d + b) * right;
        for (std::int64_t r = 0; r < right; ++r) out(row0 + r, col0 + r) = op(a, b);
      }
  return out;
}

std::int64_t product_state_index(const ChainSpec& chain, const std::vector<double>& m_per_site) {
  if (static_cast<int>(m_per_site.size()) != chain.n_sites())
    throw std::invalid_argument("need one m value per site");
  std::int64_t idx = 0;
  for (int i = 0; i < chain.n_sites(); ++i) {
    const auto& s = chain.sites[static_cast<std::size_t>(i)];
    idx = idx * s.local_dim() + local_index(s.spin, m_per_site[static_cast<std::size_t>(i)]);
  }
  return idx;
}

std::vector<double> basis_labels(const ChainSpec& chain, std::int64_t index) {
  const auto dims = chain.site_dims();
  std::vector<double> m(static_cast<std::size_t>(chain.n_sites()));
  for (int i = chain.n_sites() - 1; i >= 0; --i) {
    const int d = dims[static_cast<std::size_t>(i)];
    const int a = static_cast<int>(index % d);
    index /= d;
    m[static_cast<std::size_t>(i)] = chain.sites[static_cast<std::size_t>(i)].spin - a;
  }
  if (index != 0) throw std::invalid_argument("basis index out of range");
  return m;
}

} // namespace spinchain
