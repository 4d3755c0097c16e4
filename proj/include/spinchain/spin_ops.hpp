#pragma once

#include <Eigen/Dense>

#include "spinchain/chain.hpp"

// Single-site spin operators and their embedding into the chain product
// space.
//
// Basis conventions (fixed across the whole library):
//  * local basis of a spin-S site is ordered m = +S, +S-1, ..., -S, so the
//    local index of |m> is (S - m);
//  * the chain basis is the tensor product with site 0 slowest, i.e. the
//    product index of |m_0, m_1, ..., m_{N-1}> is
//    ((idx_0 * d_1 + idx_1) * d_2 + idx_2) ... with d_i the local dims.

namespace spinchain {

struct SpinMatrices {
  Eigen::MatrixXcd sz, sp, sm, sx, sy; // (2S+1) x (2S+1)
};

// Matrix representations of S_z, S_+, S_-, S_x, S_y for a single spin.
// Throws std::invalid_argument unless 2*spin is a positive integer.
SpinMatrices spin_matrices(double spin);

// Local index of |m> within a spin-S site (0 for m = +S).
int local_index(double spin, double m);

// kron(I_left, op, I_right) placing a single-site operator at `site`.
// Throws std::invalid_argument if op's dimension does not match the site.
Eigen::MatrixXcd embed_site_operator(const Eigen::MatrixXcd& op, int site,
                                     const ChainSpec& chain);

// Product-basis index of the product state |m_0, ..., m_{N-1}>.
std::int64_t product_state_index(const ChainSpec& chain,
                                 const std::vector<double>& m_per_site);

// m quantum numbers of all sites for a product-basis index (inverse of the
// above).
std::vector<double> basis_labels(const ChainSpec& chain, std::int64_t index);

} // namespace spinchain
