#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "spinchain/constants.hpp"
#include "spinchain/diabolic.hpp"
#include "spinchain/eigensolver.hpp"
#include "spinchain/errors.hpp"
#include "spinchain/geometry.hpp"
#include "spinchain/hamiltonian.hpp"
#include "spinchain/rates.hpp"
#include "spinchain/spin_ops.hpp"

using namespace spinchain;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {

// The recurring single-site benchmark: S=2, D=-1.87, E=0.31, g=2.11.
SiteParams benchmark_site() {
  SiteParams s;
  s.spin = 2.0;
  s.d_mev = -1.87;
  s.e_mev = 0.31;
  s.g = 2.11;
  return s;
}

// Five-site antiferromagnetic benchmark chain used across the examples.
ChainSpec five_site_afm() {
  const double d[5] = {-2.05, -2.35, -2.85, -2.35, -2.05};
  const double e[5] = {0.33, 0.32, 0.32, 0.32, 0.33};
  const double g[5] = {2.5, 2.11, 2.11, 2.11, 2.11};
  ChainSpec chain;
  for (int i = 0; i < 5; ++i) {
    SiteParams s;
    s.spin = 2.0;
    s.d_mev = d[i];
    s.e_mev = e[i];
    s.g = g[i];
    chain.sites.push_back(s);
  }
  chain.couplings_mev = {0.85, 1.0, 1.0, 0.85};
  return chain;
}

Spectrum dense_spectrum(const ChainSpec& chain, const Vector3d& field) {
  return diagonalize(build_hamiltonian(chain, total_site_fields(field, chain)), std::nullopt,
                     chain.site_dims());
}

double boltzmann_ratio(double e_f, double e_i, double temperature_k) {
  return std::exp(-(e_f - e_i) / (constants::k_B * temperature_k));
}

// Checks W(f,i)/W(i,f) = exp(-(E_f - E_i)/kT) on every pair whose two rates
// are both above a floor relative to the largest rate in the matrix.
void check_detailed_balance(const MatrixXd& w, const VectorXd& energies, double temperature_k,
                            double tol) {
  const double floor = 1e-12 * w.maxCoeff();
  int checked = 0;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index f = i + 1; f < w.rows(); ++f) {
      if (w(f, i) <= floor || w(i, f) <= floor) continue;
      const double ratio = w(f, i) / w(i, f);
      const double expected = boltzmann_ratio(energies(f), energies(i), temperature_k);
      CHECK(std::abs(ratio / expected - 1.0) < tol);
      ++checked;
    }
  }
  CHECK(checked > 10);
}

// Random generator matrix satisfying detailed balance against the given
// energies exactly: W(f,i) = S(f,i) exp(-(E_f - E_i)/2kT) with symmetric S.
MatrixXd balanced_random_rates(std::mt19937_64& rng, const VectorXd& energies,
                               double temperature_k) {
  const Eigen::Index n = energies.size();
  MatrixXd s(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index f = 0; f <= i; ++f) {
      s(i, f) = s(f, i) = test_helpers::uniform(rng, 0.1, 2.0);
    }
  }
  MatrixXd w(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index f = 0; f < n; ++f) {
      w(f, i) = f == i ? 0.0
                       : s(f, i) * std::exp(-(energies(f) - energies(i)) /
                                            (2.0 * constants::k_B * temperature_k));
    }
  }
  return w;
}

} // namespace

TEST_CASE("rate kernel: value at zero, antisymmetric part, balance ratio") {
  for (const double t : {0.5, 1.3, 4.2}) {
    const double kt = constants::k_B * t;
    CHECK(rate_kernel(0.0, t) == doctest::Approx(kt).epsilon(1e-12));
    for (const double x : {1e-9, 1e-4, 0.03, 0.4, 2.0, 9.0}) {
      const double fwd = rate_kernel(x, t);
      const double bwd = rate_kernel(-x, t);
      CHECK(fwd > 0.0);
      CHECK(bwd >= 0.0);
      // g(x) - g(-x) = x exactly.
      CHECK(fwd - bwd == doctest::Approx(x).epsilon(1e-10));
      // g(-x)/g(x) = exp(-x/kT): detailed balance of a single kernel.
      if (x / kt < 250.0) {
        CHECK(bwd / fwd == doctest::Approx(std::exp(-x / kt)).epsilon(1e-9));
      }
    }
  }
  // The exact branch agrees with the small-x series at the switchover.
  const double t = 2.0;
  const double kt = constants::k_B * t;
  for (const double u : {1.1e-8, -1.1e-8, 3e-8}) {
    const double exact = rate_kernel(kt * u, t);
    const double series = kt * (1.0 + 0.5 * u);
    CHECK(std::abs(exact - series) < 1e-12 * kt);
  }
  // Sharp zero-temperature limit.
  CHECK(rate_kernel(0.7, 0.0) == 0.7);
  CHECK(rate_kernel(-0.7, 0.0) == 0.0);
  // High-energy limit ~ x.
  CHECK(rate_kernel(40.0, 1.0) == doctest::Approx(40.0).epsilon(1e-12));
  CHECK_THROWS_AS(rate_kernel(1.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(rate_kernel(std::numeric_limits<double>::quiet_NaN(), 1.0),
                  std::invalid_argument);
}

TEST_CASE("transition elements: single-spin ground doublet oracle") {
  const ChainSpec chain = uniform_chain(1, benchmark_site(), 0.0);
  const Spectrum spec = dense_spectrum(chain, Vector3d::Zero());
  const TransitionElements m = transition_elements(spec, chain, 0);

  // The zero-field ground doublet is the symmetric/antisymmetric pair of
  // m = +/-2 wells: S_z connects them with weight close to 2 * |<+2|+2>|^2
  // while the transverse operators cannot bridge Delta_m = 4.
  CHECK(std::abs(m.z(1, 0)) == doctest::Approx(1.9804865).epsilon(1e-6));
  CHECK(std::abs(m.x(1, 0)) < 1e-8);
  CHECK(std::abs(m.y(1, 0)) < 1e-8);
  CHECK(scattering_intensity(spec, chain, 0, 0, 1) ==
        doctest::Approx(3.9223266).epsilon(1e-6));
  CHECK(scattering_intensity(spec, chain, 0, 0, 1) ==
        doctest::Approx(std::norm(m.x(1, 0)) + std::norm(m.y(1, 0)) + std::norm(m.z(1, 0)))
            .epsilon(1e-12));

  // Algebraic identities: plus = x + i y, minus = x - i y, Hermiticity.
  const std::complex<double> im(0.0, 1.0);
  CHECK((m.plus - (m.x + im * m.y)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((m.minus - (m.x - im * m.y)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((m.z - m.z.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((m.plus - m.minus.adjoint()).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(transition_elements(spec, chain, 2), std::invalid_argument);
  CHECK_THROWS_AS(scattering_intensity(spec, chain, 0, 0, 99), std::invalid_argument);
}

TEST_CASE("five-site antiferromagnet: staggered ground state and pocket labels") {
  const ChainSpec chain = five_site_afm();
  const Vector3d field(0.1, 0.0, 0.02);
  const ChainHamiltonian op(chain, total_site_fields(field, chain));
  EigOptions eig;
  const Spectrum spec = diagonalize(op, 8, eig);

  // Ground state is staggered: <S_z,i> close to -2, +2, -2, +2, -2 (the
  // +z field favors total moment down with these g-factors).
  const std::vector<int> dims = chain.site_dims();
  Eigen::MatrixXcd y(spec.dim(), 1);
  for (int site = 0; site < 5; ++site) {
    const SpinMatrices ops = spin_matrices(2.0);
    apply_site_operator(ops.sz, site, dims, spec.states.col(0), y);
    const double sz = spec.states.col(0).dot(y.col(0)).real();
    const double expected = site % 2 == 0 ? -2.0 : 2.0;
    CHECK(sz * expected > 0.0);
    CHECK(std::abs(sz) > 1.7);
  }

  const PocketAssignment pockets = classify_pockets(spec, chain);
  REQUIRE(pockets.labels.size() == 8);
  CHECK(pockets.labels[0] == PocketLabel::A);
  CHECK(pockets.labels[1] == PocketLabel::B);
  CHECK(pockets.overlap_a(0) > 0.5);
  CHECK(pockets.overlap_b(1) > 0.5);
  CHECK(pockets.overlap_a(0) <= 1.0 + 1e-12);

  // Anchor indices match an independent product-state computation.
  const std::int64_t a_expected =
      product_state_index(chain, {-2.0, 2.0, -2.0, 2.0, -2.0});
  const std::int64_t b_expected =
      product_state_index(chain, {2.0, -2.0, 2.0, -2.0, 2.0});
  CHECK(pockets.anchor_a_index == a_expected);
  CHECK(pockets.anchor_b_index == b_expected);

  CHECK_THROWS_AS(classify_pockets(spec, chain, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(classify_pockets(spec, chain, 1.5), std::invalid_argument);
}

TEST_CASE("pocket anchors: ferromagnetic coupling selects aligned states") {
  SiteParams site = benchmark_site();
  const ChainSpec chain = uniform_chain(2, site, -0.9);
  const Spectrum spec = dense_spectrum(chain, Vector3d(0.2, 0.0, 0.05));
  const PocketAssignment pockets = classify_pockets(spec, chain);
  CHECK(pockets.anchor_a_index == product_state_index(chain, {-2.0, -2.0}));
  CHECK(pockets.anchor_b_index == product_state_index(chain, {2.0, 2.0}));
  CHECK(pockets.labels[0] == PocketLabel::A);
  CHECK(pockets.labels[1] == PocketLabel::B);

  // Single site: pockets are the two extremal m states.
  const ChainSpec single = uniform_chain(1, site, 0.0);
  const Spectrum sspec = dense_spectrum(single, Vector3d(0.0, 0.0, 0.1));
  const PocketAssignment sp = classify_pockets(sspec, single);
  CHECK(sp.anchor_a_index == product_state_index(single, {-2.0}));
  CHECK(sp.anchor_b_index == product_state_index(single, {2.0}));
}

TEST_CASE("rate matrix: non-negative entries, zero diagonal, channel sum") {
  SiteParams a = benchmark_site();
  SiteParams b = benchmark_site();
  b.d_mev = -1.1;
  b.e_mev = 0.25;
  b.g = 2.0;
  ChainSpec chain;
  chain.sites = {a, b};
  chain.couplings_mev = {0.4};
  const Spectrum spec = dense_spectrum(chain, Vector3d(0.8, 0.0, 0.3));

  TransportParams tp;
  tp.temperature_k = 2.0;
  tp.bias_mv = 2.5;
  tp.current_setpoint_pa = 30.0;
  tp.g_ss_us = 2.0;
  tp.tip_polarization = 0.4;
  tp.probed_site = 0;
  tp.u0_squared = 0.05;
  const RateMatrix rm = build_rate_matrix(spec, chain, tp);

  CHECK(rm.total.minCoeff() >= 0.0);
  CHECK(rm.tip_to_sample.minCoeff() >= 0.0);
  CHECK(rm.sample_to_tip.minCoeff() >= 0.0);
  CHECK(rm.substrate.minCoeff() >= 0.0);
  CHECK(rm.total.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK((rm.total - rm.tip_to_sample - rm.sample_to_tip - rm.substrate)
            .cwiseAbs()
            .maxCoeff() < 1e-12 * rm.total.maxCoeff());
  CHECK(rm.total.maxCoeff() > 0.0);
  CHECK(rm.energies_mev.size() == spec.n_states());

  // Probing the other site changes the tip channel but not the substrate.
  TransportParams tp1 = tp;
  tp1.probed_site = 1;
  const RateMatrix rm1 = build_rate_matrix(spec, chain, tp1);
  CHECK((rm1.substrate - rm.substrate).cwiseAbs().maxCoeff() < 1e-9 * rm.substrate.maxCoeff());
  CHECK((rm1.tip_to_sample - rm.tip_to_sample).cwiseAbs().maxCoeff() >
        1e-3 * rm.tip_to_sample.maxCoeff());

  // No junction current: tip channels vanish, substrate unchanged.
  TransportParams tp0 = tp;
  tp0.current_setpoint_pa = 0.0;
  const RateMatrix rm0 = build_rate_matrix(spec, chain, tp0);
  CHECK(rm0.tip_to_sample.maxCoeff() == 0.0);
  CHECK(rm0.sample_to_tip.maxCoeff() == 0.0);
  CHECK((rm0.substrate - rm.substrate).cwiseAbs().maxCoeff() == 0.0);

  // Zero bias without an explicit junction conductance: no tip rates either.
  TransportParams tpz = tp;
  tpz.bias_mv = 0.0;
  const RateMatrix rmz = build_rate_matrix(spec, chain, tpz);
  CHECK(rmz.tip_to_sample.maxCoeff() == 0.0);
  CHECK(rmz.sample_to_tip.maxCoeff() == 0.0);
}

TEST_CASE("rate matrix: detailed balance at zero bias") {
  SiteParams a = benchmark_site();
  SiteParams b = benchmark_site();
  b.d_mev = -1.4;
  ChainSpec chain;
  chain.sites = {a, b};
  chain.couplings_mev = {0.5};
  const Spectrum spec = dense_spectrum(chain, Vector3d(0.6, 0.0, 0.2));

  TransportParams tp;
  tp.temperature_k = 4.0;
  tp.bias_mv = 0.0;
  tp.tip_conductance_us = 0.5; // keep the junction alive at zero bias
  tp.g_ss_us = 1.5;
  tp.tip_polarization = 0.7;
  tp.u0_squared = 0.1;
  const RateMatrix rm = build_rate_matrix(spec, chain, tp);

  // Substrate channel alone, the summed tip pair, and the total all satisfy
  // detailed balance.  One tunneling direction of a polarized tip does not
  // have to (its time reverse is the opposite direction).
  check_detailed_balance(rm.substrate, rm.energies_mev, tp.temperature_k, 1e-6);
  check_detailed_balance(rm.tip_to_sample + rm.sample_to_tip, rm.energies_mev,
                         tp.temperature_k, 1e-6);
  check_detailed_balance(rm.total, rm.energies_mev, tp.temperature_k, 1e-6);

  // Unpolarized tip: each direction balances on its own.
  TransportParams tpu = tp;
  tpu.tip_polarization = 0.0;
  const RateMatrix rmu = build_rate_matrix(spec, chain, tpu);
  check_detailed_balance(rmu.tip_to_sample, rmu.energies_mev, tp.temperature_k, 1e-6);
  check_detailed_balance(rmu.sample_to_tip, rmu.energies_mev, tp.temperature_k, 1e-6);

  // The Boltzmann steady state follows.
  const SteadyState ss = steady_state(rm.total);
  CHECK(ss.n_closed_classes == 1);
  VectorXd boltz = (-(rm.energies_mev.array() - rm.energies_mev(0)) /
                    (constants::k_B * tp.temperature_k))
                       .exp();
  boltz /= boltz.sum();
  CHECK((ss.populations - boltz).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("rate matrix: bias activates higher transitions") {
  const ChainSpec chain = uniform_chain(1, benchmark_site(), 0.0);
  const Spectrum spec = dense_spectrum(chain, Vector3d(0.0, 0.0, 0.2));

  TransportParams tp;
  tp.temperature_k = 1.3;
  tp.current_setpoint_pa = 20.0;
  tp.g_ss_us = 1.0;
  tp.u0_squared = 0.1;

  // Energy needed to reach state 2 from the ground state.
  const double e02 = spec.energies_mev(2) - spec.energies_mev(0);
  tp.bias_mv = 0.4 * e02;
  const RateMatrix low = build_rate_matrix(spec, chain, tp);
  tp.bias_mv = 1.3 * e02;
  const RateMatrix high = build_rate_matrix(spec, chain, tp);
  CHECK(high.tip_to_sample(2, 0) > 50.0 * low.tip_to_sample(2, 0));

  // At fixed conductance the forward kernel grows monotonically with bias.
  TransportParams tg = tp;
  tg.tip_conductance_us = 0.01;
  double prev = -1.0;
  for (const double v : {0.5, 1.5, 3.0, 5.0, 8.0}) {
    tg.bias_mv = v;
    const RateMatrix rm = build_rate_matrix(spec, chain, tg);
    CHECK(rm.tip_to_sample(2, 0) >= prev);
    prev = rm.tip_to_sample(2, 0);
  }
}

TEST_CASE("steady state: Boltzmann fixed point of balanced random generators") {
  std::mt19937_64 rng(0xbead5eedULL);
  const double t = 1.7;
  for (int trial = 0; trial < 25; ++trial) {
    VectorXd energies(10);
    for (Eigen::Index i = 0; i < energies.size(); ++i) {
      energies(i) = test_helpers::uniform(rng, 0.0, 5.0 * constants::k_B * t);
    }
    const MatrixXd w = balanced_random_rates(rng, energies, t);
    const SteadyState ss = steady_state(w);
    CHECK(ss.n_closed_classes == 1);
    CHECK(ss.warnings.empty());
    VectorXd boltz = (-(energies.array() - energies.minCoeff()) / (constants::k_B * t)).exp();
    boltz /= boltz.sum();
    CHECK((ss.populations - boltz).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(ss.populations.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("steady state: reducible and absorbing chains") {
  // Two disconnected two-state blocks: reducible, equal-weight mixture.
  MatrixXd w = MatrixXd::Zero(4, 4);
  w(1, 0) = 2.0;
  w(0, 1) = 1.0;
  w(3, 2) = 5.0;
  w(2, 3) = 5.0;
  const SteadyState ss = steady_state(w);
  CHECK(ss.n_closed_classes == 2);
  REQUIRE(ss.warnings.size() == 1);
  CHECK(ss.warnings[0].find("reducible") != std::string::npos);
  // Block one: p1/p0 = 2, weight 1/2 -> (1/6, 2/6); block two: (1/4, 1/4).
  CHECK(ss.populations(0) == doctest::Approx(1.0 / 6.0).epsilon(1e-10));
  CHECK(ss.populations(1) == doctest::Approx(2.0 / 6.0).epsilon(1e-10));
  CHECK(ss.populations(2) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(ss.populations(3) == doctest::Approx(0.25).epsilon(1e-10));

  // One-way cascade 0 -> 1 -> 2: unique absorbing state, no warning.
  MatrixXd cascade = MatrixXd::Zero(3, 3);
  cascade(1, 0) = 3.0;
  cascade(2, 1) = 7.0;
  const SteadyState abs_ss = steady_state(cascade);
  CHECK(abs_ss.n_closed_classes == 1);
  CHECK(abs_ss.warnings.empty());
  CHECK(abs_ss.populations(2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(abs_ss.populations(0) == 0.0);

  MatrixXd bad = MatrixXd::Zero(2, 2);
  bad(1, 0) = -1.0;
  CHECK_THROWS_AS(steady_state(bad), std::invalid_argument);
  CHECK_THROWS_AS(steady_state(MatrixXd::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("pocket lifetimes: closed forms for two and three states") {
  // Two states: T_A = 1/W(B<-A) exactly, and the two-level diagnostic agrees.
  RateMatrix rm;
  rm.total = MatrixXd::Zero(2, 2);
  rm.total(1, 0) = 4.0;
  rm.total(0, 1) = 0.5;
  rm.energies_mev = VectorXd::Zero(2);
  PocketAssignment pockets;
  pockets.labels = {PocketLabel::A, PocketLabel::B};
  pockets.overlap_a = VectorXd::Zero(2);
  pockets.overlap_b = VectorXd::Zero(2);
  const PocketLifetimes two = pocket_lifetimes(rm, pockets);
  CHECK(two.t_a_s == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(two.t_b_s == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(two.t_a_two_level_s == doctest::Approx(two.t_a_s).epsilon(1e-12));
  CHECK(two.t_b_two_level_s == doctest::Approx(two.t_b_s).epsilon(1e-12));
  CHECK(average_lifetime(two.t_a_s, two.t_b_s) == doctest::Approx(2.0 / 9.0).epsilon(1e-12));

  // A -> other -> B ladder: MFPT(A->B) = (a + b + c)/(a c) with a the A->other
  // rate, b the return, c the passage onward.
  const double a = 3.0, b = 11.0, c = 2.0;
  RateMatrix ladder;
  ladder.total = MatrixXd::Zero(3, 3);
  ladder.total(1, 0) = a;
  ladder.total(0, 1) = b;
  ladder.total(2, 1) = c;
  ladder.total(1, 2) = 1.0;
  ladder.energies_mev = VectorXd::Zero(3);
  PocketAssignment lp;
  lp.labels = {PocketLabel::A, PocketLabel::Other, PocketLabel::B};
  const PocketLifetimes three = pocket_lifetimes(ladder, lp);
  CHECK(three.t_a_s == doctest::Approx((a + b + c) / (a * c)).epsilon(1e-12));
  // No direct A <-> B rate: the two-level diagnostic is infinite.
  CHECK(std::isinf(three.t_a_two_level_s));

  // Unreachable pocket: singular first-passage system.
  RateMatrix stuck;
  stuck.total = MatrixXd::Zero(3, 3);
  stuck.total(1, 0) = a;
  stuck.total(0, 1) = b; // state 2 (pocket B) is never entered
  stuck.energies_mev = VectorXd::Zero(3);
  CHECK_THROWS_AS(pocket_lifetimes(stuck, lp), NumericalError);

  // Empty pocket: classification error.
  PocketAssignment empty;
  empty.labels = {PocketLabel::A, PocketLabel::Other, PocketLabel::Other};
  CHECK_THROWS_AS(pocket_lifetimes(ladder, empty), InsufficientDataError);
}

TEST_CASE("average lifetime: harmonic mean with infinite branches") {
  CHECK(average_lifetime(1.0, 1.0) == doctest::Approx(0.5));
  CHECK(average_lifetime(2.0, 6.0) == doctest::Approx(1.5));
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(average_lifetime(inf, 3.0) == doctest::Approx(3.0));
  CHECK(std::isinf(average_lifetime(inf, inf)));
  CHECK(average_lifetime(0.0, 5.0) == 0.0);
  CHECK_THROWS_AS(average_lifetime(-1.0, 2.0), std::invalid_argument);
}

TEST_CASE("lifetime curve: deterministic pipeline on a ferromagnetic pair") {
  const ChainSpec chain = uniform_chain(2, benchmark_site(), -0.9);
  std::vector<FieldConfig> fields;
  for (const double b1 : {0.6, 1.0, 1.4}) {
    FieldConfig cfg;
    cfg.b1_t = b1;
    cfg.alpha_atomic_deg = 2.0; // small tilt -> B_z component
    cfg.alpha_tilt_deg = 0.0;
    cfg.beta_deg = 0.0;
    fields.push_back(cfg);
  }
  TransportParams tp;
  tp.temperature_k = 0.8;
  tp.bias_mv = 2.0;
  tp.current_setpoint_pa = 20.0;
  tp.g_ss_us = 2.0;
  tp.tip_polarization = 0.3;
  tp.probed_site = 0;
  tp.u0_squared = 0.05;

  const std::vector<LifetimePrediction> curve = lifetime_curve(chain, fields, tp);
  REQUIRE(curve.size() == 3);
  for (const LifetimePrediction& p : curve) {
    CHECK(p.gap_mev >= 0.0);
    CHECK(p.t_a_s > 0.0);
    CHECK(p.t_b_s > 0.0);
    CHECK(p.t_avg_s ==
          doctest::Approx(average_lifetime(p.t_a_s, p.t_b_s)).epsilon(1e-12));
    CHECK(p.scattering_intensity >= 0.0);
    CHECK(p.pocket_overlap_a > 0.5);
    CHECK(p.pocket_overlap_b > 0.5);
    CHECK(p.pocket_labels.size() == static_cast<std::size_t>(chain.hilbert_dim()));
  }
  // The tilt puts a positive z component on the field.
  CHECK(curve[1].field_t(2) > 0.0);
  CHECK(curve[1].field_t(0) > 10.0 * curve[1].field_t(2));

  // Byte-identical on rerun.
  const std::vector<LifetimePrediction> again = lifetime_curve(chain, fields, tp);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    CHECK(curve[i].t_a_s == again[i].t_a_s);
    CHECK(curve[i].t_b_s == again[i].t_b_s);
    CHECK(curve[i].gap_mev == again[i].gap_mev);
    CHECK(curve[i].scattering_intensity == again[i].scattering_intensity);
  }

  CHECK_THROWS_AS(lifetime_curve(chain, {}, tp), std::invalid_argument);
}

TEST_CASE("current decomposition: synthetic roundtrip and error paths") {
  const double r_o = 2.4e-3, r_t = 6.1e-4, i0 = 40.0;
  std::vector<std::pair<double, double>> pts;
  for (const double i : {5.0, 10.0, 20.0, 40.0, 80.0}) {
    const double inv_t = i * (r_o + r_t) + i0 * r_t;
    pts.push_back({i, 1.0 / inv_t});
  }
  const CurrentFit fit = current_decomposition_fit(pts, i0);
  CHECK(fit.r_o == doctest::Approx(r_o).epsilon(1e-10));
  CHECK(fit.r_t == doctest::Approx(r_t).epsilon(1e-10));
  CHECK(fit.i0_pa == i0);
  CHECK(fit.slope == doctest::Approx(r_o + r_t).epsilon(1e-10));
  CHECK(fit.intercept == doctest::Approx(i0 * r_t).epsilon(1e-10));
  CHECK(fit.r_o_stderr < 1e-12);
  CHECK(fit.r_t_stderr < 1e-12);

  // 0.5% multiplicative noise still recovers both coefficients within 1%.
  std::mt19937_64 rng(77);
  std::vector<std::pair<double, double>> noisy;
  for (const auto& [i, t] : pts) {
    noisy.push_back({i, t * (1.0 + test_helpers::uniform(rng, -0.005, 0.005))});
  }
  const CurrentFit nfit = current_decomposition_fit(noisy, i0);
  CHECK(nfit.r_o == doctest::Approx(r_o).epsilon(0.01));
  CHECK(nfit.r_t == doctest::Approx(r_t).epsilon(0.01));
  CHECK(nfit.r_o_stderr > 0.0);

  CHECK_THROWS_AS(current_decomposition_fit({{1.0, 1.0}, {2.0, 1.0}}, i0),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      current_decomposition_fit({{1.0, 1.0}, {1.0, 1.1}, {1.0, 0.9}}, i0), FitError);
  CHECK_THROWS_AS(current_decomposition_fit(pts, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(current_decomposition_fit({{1.0, 1.0}, {2.0, 0.0}, {3.0, 1.0}}, i0),
                  std::invalid_argument);
}

TEST_CASE("transport parameters: validation and bath current") {
  TransportParams tp;
  tp.g_ss_us = 4.0;
  tp.temperature_k = 1.3;
  CHECK(bath_current_pa(tp) ==
        doctest::Approx(4.0 * 1e3 * constants::k_B * 1.3).epsilon(1e-12));

  CHECK_NOTHROW(tp.validate(1));
  TransportParams bad = tp;
  bad.temperature_k = 0.0;
  CHECK_THROWS_AS(bad.validate(1), std::invalid_argument);
  bad = tp;
  bad.tip_polarization = 1.2;
  CHECK_THROWS_AS(bad.validate(1), std::invalid_argument);
  bad = tp;
  bad.current_setpoint_pa = -2.0;
  CHECK_THROWS_AS(bad.validate(1), std::invalid_argument);
  bad = tp;
  bad.probed_site = 3;
  CHECK_THROWS_AS(bad.validate(2), std::invalid_argument);
  bad = tp;
  bad.u0_squared = -0.1;
  CHECK_THROWS_AS(bad.validate(1), std::invalid_argument);
}
