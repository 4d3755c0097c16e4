#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

// Chain description: per-site single-ion parameters plus nearest-neighbour
// Heisenberg couplings.  The model Hamiltonian is
//
//   H = sum_i [ g_i mu_B B_i . S_i + D_i S_z,i^2 + E_i (S_x,i^2 - S_y,i^2) ]
//     + sum_i J_i S_i . S_{i+1}
//
// with J > 0 antiferromagnetic.  The z axis is the local easy axis (D < 0),
// x the in-surface hard-plane axis the transverse field is applied along.

namespace spinchain {

struct SiteParams {
  double spin = 2.0; // S; integer or half-integer, > 0
  double d_mev = 0.0; // axial anisotropy D
  double e_mev = 0.0; // transverse anisotropy E (convention E >= 0)
  double g = 2.0; // Lande g-factor
  Eigen::Vector3d tip_field_T = Eigen::Vector3d::Zero(); // local tip dipole field

  int local_dim() const { return static_cast<int>(2.0 * spin + 1.5); }
};

struct ChainSpec {
  std::vector<SiteParams> sites;
  std::vector<double> couplings_mev; // J_i between sites i and i+1; size N-1

  // Largest Hilbert-space dimension accepted by validate().
  std::int64_t dimension_cap = 1'000'000;

  int n_sites() const { return static_cast<int>(sites.size()); }
  std::vector<int> site_dims() const;
  std::int64_t hilbert_dim() const; // product of local dims (may be huge; no cap applied)

  // Throws std::invalid_argument on structural problems (no sites, coupling
  // count mismatch, non-half-integral or non-positive spins, non-finite
  // parameters, dimension cap exceeded).  Returns human-readable warnings for
  // legal-but-suspicious input (negative E).
  std::vector<std::string> validate() const;
};

// Convenience builder: N identical sites, uniform coupling, no tip field.
ChainSpec uniform_chain(int n_sites, const SiteParams& site, double j_mev);

} // namespace spinchain
