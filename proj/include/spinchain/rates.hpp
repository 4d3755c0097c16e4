#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spinchain/chain.hpp"
#include "spinchain/eigensolver.hpp"
#include "spinchain/geometry.hpp"
#include "spinchain/spectrum.hpp"

// Pauli master-equation rates for a spin chain exchange-coupled to tunneling
// electrons, and the magnetization lifetimes that follow from them.
//
// Model: each tunneling electron scatters off one chain site through an
// exchange interaction u0 * S_site . s_electron.  Three electrode pairs
// contribute: tip -> sample and sample -> tip (junction conductance taken
// from the current setpoint, electron energy shifted by +/- the bias, probed
// site only) and sample -> sample (substrate electrons, conductance g_ss,
// zero energy shift, every site).  Golden-rule rates between eigenstates
// |i> -> |f> take the form
//
//   W = u0^2 * G_pair/e^2 * [ |M+|^2 w+ + |M-|^2 w- + |Mz|^2 wz ]
//                         * g(E_i - E_f + eV_pair)
//
// with M_a = <f|S_a,site|i>, g() the thermally broadened kernel below, and
// w the electron-spin weights.  A tip polarized along +z carries spin-up /
// spin-down electron fractions (1 +/- eta)/2; the substrate is unpolarized.
// An electron crossing from electrode e to e' weights the chain-raising
// channel S+ (electron spin flips down) by rho_e(up) * rho_e'(down), the
// S- channel by rho_e(down) * rho_e'(up), and the non-flip Sz channel by
// rho_e(up) * rho_e'(up) + rho_e(down) * rho_e'(down).  The spin-1/2 matrix
// elements common to all channels are absorbed into u0^2.
//
// At zero bias the substrate channel satisfies detailed balance on its own.
// A polarized tip satisfies it only after summing the two tunneling
// directions (the time reverse of a tip->sample event is a sample->tip
// event), which is how the detailed-balance invariant is stated and tested.

namespace spinchain {

// Junction and bath parameters for one rate calculation.
struct TransportParams {
  double temperature_k = 1.3;
  double bias_mv = 3.0; // sample bias; shifts electron energy 1:1 in meV
  double current_setpoint_pa = 10.0;
  double g_ss_us = 1.0; // substrate-substrate conductance, microsiemens
  double tip_polarization = 0.0; // eta in [-1, 1], along +z
  int probed_site = 0; // site under the tip
  // Dimensionless exchange-coupling strength u0^2 scaling every rate.  Unity
  // leaves rates in "kernel units"; presets store a value calibrated once so
  // the predicted lifetimes land in the experimentally observed decade.
  double u0_squared = 1.0;
  // Junction conductance override (microsiemens).  Unset: current/bias from
  // the setpoint, or zero when the bias is zero (no current flows through the
  // junction).  Set it to probe the zero-bias limit with live tip channels.
  std::optional<double> tip_conductance_us;

  // Throws std::invalid_argument on non-finite or out-of-range entries
  // (temperature <= 0, |eta| > 1, negative current/conductance, probed site
  // outside [0, n_sites)).
  void validate(int n_sites) const;
};

// Thermally broadened rate kernel g(x) = x / (1 - exp(-x / kT)) in meV:
// ~ x for x >> kT (every electron has enough energy), k_B*T at x = 0, and
// exponentially suppressed ~ |x| exp(-|x|/kT) for x << -kT.  Satisfies
// g(x) - g(-x) = x exactly and g(-x)/g(x) = exp(-x/kT) (detailed balance).
// temperature_k = 0 gives the sharp limit max(x, 0).
double rate_kernel(double delta_e_mev, double temperature_k);

// Matrix elements <f| S_a,site |i> between eigenstates, M_a(f, i), for the
// five operator flavors.  Rows/columns run over the states kept in `spec`.
// Satisfies plus = x + i y and minus = x - i y elementwise and the
// Hermiticity relations x(f,i) = conj(x(i,f)), plus(f,i) = conj(minus(i,f)).
struct TransitionElements {
  Eigen::MatrixXcd x, y, z, plus, minus;
};
TransitionElements transition_elements(const Spectrum& spec, const ChainSpec& chain,
                                       int site);

// Sum over a in {x, y, z} of |<f| S_a,site |i>|^2: the spin-flip scattering
// weight of the |i> -> |f> transition at the given site.  Dips when the two
// states stop being connected by single-site spin operators.
double scattering_intensity(const Spectrum& spec, const ChainSpec& chain, int site,
                            int i, int f);

// Rates W(f, i) [1/s] from state i to state f, decomposed by electrode pair.
// total = tip_to_sample + sample_to_tip + substrate.  All entries are
// non-negative with zero diagonal.
struct RateMatrix {
  Eigen::MatrixXd total;
  Eigen::MatrixXd tip_to_sample; // electron tip -> sample, energy shift +bias
  Eigen::MatrixXd sample_to_tip; // electron sample -> tip, energy shift -bias
  Eigen::MatrixXd substrate; // electron sample -> sample, no shift, all sites
  Eigen::VectorXd energies_mev; // energies of the kept states (copied)
};
RateMatrix build_rate_matrix(const Spectrum& spec, const ChainSpec& chain,
                             const TransportParams& tp);

// Stationary distribution of the master equation dp/dt = L p with
// L(f,i) = W(f,i) - delta_fi * sum_g W(g,i).  When the rate graph has a
// single closed communicating class the distribution is unique; otherwise
// each closed class is solved separately, their equal-weight mixture is
// returned, and a warning describes the reducibility.  States in open
// (transient) classes carry zero weight.  Throws NumericalError if the
// linear solve fails its residual check (1e-10 relative).
struct SteadyState {
  Eigen::VectorXd populations;
  int n_closed_classes = 1;
  std::vector<std::string> warnings;
};
SteadyState steady_state(const Eigen::MatrixXd& rates);

// Pocket classification: which eigenstates belong to which magnetization
// pocket.  The pockets are anchored at the two classical product states the
// chain orders into: for antiferromagnetic coupling (sum of couplings >= 0)
// the two staggered configurations |-S, +S, -S, ...> (pocket A) and
// |+S, -S, +S, ...> (pocket B); for ferromagnetic coupling the two aligned
// configurations |-S, ..., -S> (A) and |+S, ..., +S> (B).  A state joins a
// pocket when its squared overlap with that pocket's anchor exceeds
// `threshold`; everything else is labeled Other.
enum class PocketLabel { A, B, Other };
struct PocketAssignment {
  std::vector<PocketLabel> labels; // one per kept state
  Eigen::VectorXd overlap_a, overlap_b; // squared overlaps per kept state
  std::int64_t anchor_a_index = 0; // product-basis indices of the anchors
  std::int64_t anchor_b_index = 0;
};
PocketAssignment classify_pockets(const Spectrum& spec, const ChainSpec& chain,
                                  double threshold = 0.5);

// Pocket lifetimes from mean first-passage times of the master equation:
// t_a_s is the expected time to first reach any pocket-B state starting from
// the lowest-energy pocket-A state (intermediate Other states are passed
// through, not absorbed), and vice versa.  The two-level values 1/W(b*, a*)
// between the two lowest pocket states are exposed for diagnostics; they
// agree with the full solve when no intermediate path contributes.  Throws
// InsufficientDataError when a pocket is empty and NumericalError when the
// first-passage system is singular (target pocket unreachable).
struct PocketLifetimes {
  double t_a_s = 0.0, t_b_s = 0.0;
  double t_a_two_level_s = 0.0, t_b_two_level_s = 0.0;
};
PocketLifetimes pocket_lifetimes(const RateMatrix& rates, const PocketAssignment& pockets);

// Harmonic-mean lifetime 1/(1/t_a + 1/t_b): the decay time of the slowest
// relaxation mode of an effective two-state switcher.  Infinite inputs are
// handled (both infinite -> infinity).
double average_lifetime(double t_a_s, double t_b_s);

// One point of a lifetime-versus-field curve.
struct LifetimePrediction {
  Eigen::Vector3d field_t = Eigen::Vector3d::Zero(); // crystal-frame applied field
  double gap_mev = 0.0; // E1 - E0
  double t_a_s = 0.0, t_b_s = 0.0, t_avg_s = 0.0;
  double scattering_intensity = 0.0; // states 0 -> 1 at the probed site
  // Largest squared anchor overlap of the lowest doublet: how completely
  // states {0, 1} cover pocket A / pocket B.  Near 1 when the doublet is a
  // localized pocket pair, near 0.5 when symmetric/antisymmetric mixtures.
  double pocket_overlap_a = 0.0, pocket_overlap_b = 0.0;
  std::optional<int> sx_quanta; // ground-state transverse-moment label
  std::vector<PocketLabel> pocket_labels; // all kept states
};

struct LifetimeCurveOptions {
  Eigen::Index max_states = 250; // kept eigenstates (clamped to the dimension)
  Eigen::Index max_amplitudes = 500; // kept basis amplitudes per state
  double pocket_threshold = 0.5;
  EigOptions eig{};
  bool warm_start = true; // seed each solve with the previous point's states
};

// Full pipeline per field configuration: diagonalize, truncate, build rates,
// classify pockets, solve first-passage lifetimes.  Points are processed in
// order; results are deterministic for fixed inputs.  Throws
// std::invalid_argument on an empty field list and propagates the component
// errors above.
std::vector<LifetimePrediction> lifetime_curve(const ChainSpec& chain,
                                               const std::vector<FieldConfig>& fields,
                                               const TransportParams& tp,
                                               const LifetimeCurveOptions& opts = {});

// Decomposition of switching rates into current-driven and bath-driven
// parts.  Model: 1/T_avg = I * (r_o + r_t) + I0 * r_t, with r_o the
// per-current efficiency of the over-barrier channel (tip electrons only)
// and r_t that of the direct tunneling channel (tip and substrate electrons,
// the latter expressed as the equivalent bath current I0).  Fitting data
// (I_k, T_avg_k) determines slope = r_o + r_t and intercept = I0 * r_t by
// least squares; I0 must be supplied (the intercept alone cannot separate
// I0 from r_t).  bath_current_pa() gives the conventional default
// I0 = g_ss * k_B T / e.  Requires >= 3 points with at least two distinct
// currents and positive lifetimes; throws std::invalid_argument /
// FitError otherwise.  Standard errors come from the residual variance
// (zero when the fit is exact with no spare degrees of freedom).
struct CurrentFit {
  double r_o = 0.0, r_t = 0.0; // 1/(pA s)
  double r_o_stderr = 0.0, r_t_stderr = 0.0;
  double i0_pa = 0.0; // echoed input
  double slope = 0.0, intercept = 0.0; // 1/T_avg = slope * I + intercept
  double slope_stderr = 0.0, intercept_stderr = 0.0;
};
CurrentFit current_decomposition_fit(
    const std::vector<std::pair<double, double>>& current_pa_vs_lifetime_s,
    double i0_pa);

// Equivalent bath current I0 = g_ss * k_B T / e in pA.
double bath_current_pa(const TransportParams& tp);

} // namespace spinchain
