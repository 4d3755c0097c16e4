#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "spinchain/chain.hpp"

// Field geometry.  The vector magnet applies (B1, B2) along fixed lab axes;
// the crystal frame the Hamiltonian lives in is reached through three
// mounting rotations applied in sequence: beta about z (sample-holder wedge),
// gamma about the rotated x (negligible in practice), then alpha about the
// rotated y (in-plane crystal orientation).  Components in the crystal frame
// follow from the transposed composition acting on (B1, B2, 0).
//
// The in-plane angle is measured in two parts: alpha_atomic comes from
// atomic-resolution imaging of the surface, and a constant stage-vs-magnet
// offset alpha_tilt corrects it, so the angle entering the rotation is
// alpha = alpha_atomic - alpha_tilt.

namespace spinchain {

struct FieldConfig {
  double b1_t = 0.0; // field along the first magnet axis (T)
  double b2_t = 0.0; // field along the second magnet axis (T)

  // Tait-Bryan angles, degrees.  Stored signed; reports conventionally quote
  // |alpha|.
  double alpha_atomic_deg = 0.0; // in-plane crystal rotation as imaged
  double alpha_tilt_deg = 3.0; // constant stage offset; 3 deg for this setup
  double beta_deg = 0.0; // sample-holder angle (about -8 deg here)
  double gamma_deg = 0.0; // residual axis, negligibly small in practice

  // Effective in-plane angle entering the rotation sequence.
  double alpha_deg() const { return alpha_atomic_deg - alpha_tilt_deg; }

  // Throws std::invalid_argument unless every angle (including the effective
  // alpha) is finite and strictly inside (-90, 90) degrees and the field
  // magnitudes are finite.
  void validate() const;
};

// Crystal-frame components (B_x, B_y, B_z) in T of the applied field.
// Validates cfg.  The map is orthogonal: |result| = |(B1, B2)|.
Eigen::Vector3d lab_to_crystal(const FieldConfig& cfg);

// Closed-form limit gamma = 0, B2 = 0, evaluated directly from the effective
// alpha:  B1 * (cos a cos b, -sin b, sin a cos b).  Exact in that limit, so
// it agrees with lab_to_crystal to round-off.  Same angle domain guard.
Eigen::Vector3d simplified_field(double b1_t, double alpha_deg, double beta_deg);

// Per-site total fields: the crystal-frame external field plus each site's
// local tip field.  If probed_site is given, the chain's single configured
// tip field (at most one site may carry one; otherwise the relocation is
// ambiguous and throws) is applied to that site instead of the site it is
// stored on -- tip-field presets quoted "on the probed atom" move with the
// probed site.  Throws std::invalid_argument if probed_site is out of range.
std::vector<Eigen::Vector3d> total_site_fields(const Eigen::Vector3d& crystal_field,
                                               const ChainSpec& chain,
                                               std::optional<int> probed_site = std::nullopt);

} // namespace spinchain
