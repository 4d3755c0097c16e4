#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "spinchain/chain.hpp"
#include "spinchain/eigensolver.hpp"

// Diabolic points (DPs): transverse-field values where the two lowest
// eigenstates become degenerate and the ground state absorbs one quantum of
// S_x.  At such a point the tunneling matrix elements between the two states
// vanish, which is what makes the magnetization lifetime peak there.
//
// For a single spin with easy-axis anisotropy D < 0 and in-plane anisotropy
// E > 0 the positive crossings sit at the closed-form fields
//
//     B_{x,n} = n * sqrt(2 E (E - D)) / (g mu_B),   n odd, |n| <= 2S - 1.
//
// Chains have no closed form; find_dps() locates their crossings numerically.
// A bare E1 - E0 scan cannot do this reliably: weakly split chains (any
// ferromagnetic chain, and compensated antiferromagnetic ones) keep the two
// lowest states quasi-degenerate at every field, with splittings far below
// any practical gap tolerance.  Instead find_dps() exploits the symmetry of
// the transverse-field Hamiltonian under the product of pi rotations about x:
// the two lowest states carry opposite parity under that product, their
// parity-resolved energy difference is a smooth function of B_x that changes
// sign exactly at each crossing, and bisection on that sign pins the crossing
// field even when the magnitude of the splitting is numerically invisible.

namespace spinchain {

struct DiabolicPoint {
  double bx_t = 0.0;            // field at the crossing (T)
  int index_j = 0;              // 1-based ordinal by increasing field
  double gap_at_point_mev = 0.0; // full-configuration splitting at the crossing
  // Quanta of S_x in the ground state just past this crossing.  The label is
  // anchored at the window start by sx_quanta() of the ground state there and
  // advanced across each crossing by its multiplicity (1 for a generic
  // crossing; m when m independent pairs cross simultaneously, as for
  // decoupled identical atoms).  nullopt when the anchor is mixed; the raw
  // expectation is not used past the anchor because it drifts continuously
  // with the field-induced tilt and does not stay near integers.
  std::optional<int> sx_quanta_after;
};

// Closed-form single-atom crossing field (T) for odd index n.  `spin` sets
// the admissible index range |n| <= 2*spin - 1.  Throws std::domain_error
// when E(E - D) < 0 (no real crossing) and std::invalid_argument for an even
// or out-of-range n, a non-half-integer spin, g <= 0, or non-finite inputs.
double single_atom_dp(double d_mev, double e_mev, double g, int n,
                      double spin = 2.0);

// E1 - E0 (meV) of the chain in the external field b_t * field_dir plus any
// per-site tip fields stored in the chain.  field_dir is normalized
// internally; a zero or non-finite direction throws std::invalid_argument.
// b_t may have either sign.  Solver failures propagate as NumericalError.
double gap_function(const ChainSpec& chain, const Eigen::Vector3d& field_dir,
                    double b_t, const EigOptions& eig = {});

struct DpSearchOptions {
  // A located crossing counts as a diabolic point when the full
  // configuration's gap there is below gap_tolerance_mev plus a Zeeman floor
  // 2 mu_B sum_i S_i g_i (|B_y,i| + |B_z,i|) that bounds the splitting the
  // symmetry-breaking field components can open.  With b_z = 0 and no tip
  // fields the floor vanishes and the tolerance alone decides.
  double gap_tolerance_mev = 1e-6;
  double refine_tol_t = 1e-6; // bisection bracket width at termination
  bool label_sectors = true;  // attach sx_quanta_after to each point
  EigOptions eig{};           // solver settings for every gap evaluation
};

// Scans [bx_min, bx_max] in steps of resolution_t, brackets every sign
// change of the parity-resolved gap, and bisects each bracket down to
// refine_tol_t.  Simultaneous crossings of an even number of pairs (e.g. a
// decoupled pair of identical atoms) leave the sign unchanged and are hunted
// instead as dips of the parity-resolved gap magnitude that refine below the
// gap tolerance.  Crossings are located on the symmetric part of the
// configuration (the chain with y/z tip-field components dropped, at
// b_z = 0); the reported gap is then evaluated for the full configuration —
// external bz_t plus all stored tip fields — at the crossing field, so with
// a finite longitudinal field the result reads "the crossing sits here, and
// the longitudinal components open this much splitting at it".  Points
// failing the acceptance threshold are dropped; crossings closer together
// than about four refinement tolerances merge into one reported point.  An
// empty result means no crossing in the window, not an error.  Throws
// std::invalid_argument for an empty or non-finite range, a non-positive
// resolution, or a chain whose total spin is half-integer (such chains are
// doubly degenerate at every transverse field, so the lowest pair never
// crosses; single_atom_dp still evaluates the closed form for them).
std::vector<DiabolicPoint> find_dps(const ChainSpec& chain, double bx_min,
                                    double bx_max, double bz_t,
                                    double resolution_t,
                                    const DpSearchOptions& opts = {});

struct DpAtlasRow {
  int n_sites = 0;
  double j_over_abs_d = 0.0; // signed coupling ratio; negative = ferromagnetic
  int index_j = 0;
  double bx_t = 0.0;
  double bx_over_bx3 = 0.0;  // bx_t normalized to the single-atom n = 3 field
  double gap_mev = 0.0;
  std::optional<int> sx_quanta_after;
};

struct DpAtlas {
  std::vector<DpAtlasRow> rows; // ordered by (n_sites, j_over_abs_d, bx_t)
  std::vector<std::string> warnings; // skipped cells and similar notes
};

struct DpAtlasOptions {
  // Scan window top as a multiple of the single-atom B_{x,3}: ferromagnetic
  // chains never cross above that field, while strongly coupled even-length
  // antiferromagnetic chains leave the window entirely.
  double bx_max_factor = 1.12;
  double bx_min_t = 1e-3; // skip the trivial B_x = 0 degeneracy
  double resolution_t = 0.0; // grid step; 0 picks B_{x,3} / 400
  DpSearchOptions search{};
};

// All positive diabolic points at b_z = 0 for uniform chains built from
// base_site, for every length in n_list crossed with every signed coupling
// ratio in ratio_list (J = ratio * |D|).  Any tip field on base_site is
// ignored.  Cells whose Hilbert dimension exceeds the dimension cap are
// skipped with a warning instead of failing the whole table.
DpAtlas dp_atlas(const std::vector<int>& n_list,
                 const std::vector<double>& ratio_list,
                 const SiteParams& base_site, const DpAtlasOptions& opts = {});

// sum_i <state| S_x,i |state>, the total spin projection along x.  The state
// must be normalized to 1e-8 and match the chain dimension.
double total_sx_expectation(const Eigen::Ref<const Eigen::VectorXcd>& state,
                            const ChainSpec& chain);

// Rounded |total_sx_expectation|, used to label ground-state sectors between
// diabolic points.  Returns nullopt ("mixed") when the magnitude is more
// than 0.25 away from every integer.
std::optional<int> sx_quanta(const Eigen::Ref<const Eigen::VectorXcd>& state,
                             const ChainSpec& chain);

} // namespace spinchain
