#include "spinchain/rates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "spinchain/constants.hpp"
#include "spinchain/diabolic.hpp"
#include "spinchain/errors.hpp"
#include "spinchain/hamiltonian.hpp"
#include "spinchain/spin_ops.hpp"

namespace spinchain {

namespace {

void check_spectrum_chain(const Spectrum& spec, const ChainSpec& chain) {
  if (spec.n_states() < 1) {
    throw std::invalid_argument("spectrum holds no states");
  }
  if (spec.dim() != chain.hilbert_dim()) {
    std::ostringstream msg;
    msg << "spectrum dimension " << spec.dim() << " does not match the chain's Hilbert dimension "
        << chain.hilbert_dim();
    throw std::invalid_argument(msg.str());
  }
}

void check_site(const ChainSpec& chain, int site, const char* what) {
  if (site < 0 || site >= chain.n_sites()) {
    std::ostringstream msg;
    msg << what << " " << site << " out of range [0, " << chain.n_sites() << ")";
    throw std::invalid_argument(msg.str());
  }
}

// |<f|S+|i>|^2, |<f|S-|i>|^2, |<f|S_z|i>|^2 for one site, as (f, i) arrays.
// Only two matrix products are needed: |M-| is |M+| transposed (S- = S+^dag),
// and both products run in real arithmetic when the eigenvectors are real
// (S+ and S_z have real entries in the m basis).
struct ChannelWeights {
  Eigen::ArrayXXd p2, m2, z2;
};

ChannelWeights site_channel_weights(const Spectrum& spec, const ChainSpec& chain, int site) {
  const SpinMatrices ops = spin_matrices(chain.sites[static_cast<std::size_t>(site)].spin);
  const std::vector<int> dims = chain.site_dims();
  const Eigen::Index k = spec.n_states();

  Eigen::MatrixXcd y(spec.dim(), k);
  ChannelWeights w;
  if (spec.states_are_real) {
    const Eigen::MatrixXd r = spec.states.real();
    apply_site_operator(ops.sp, site, dims, spec.states, y);
    const Eigen::MatrixXd mp = r.transpose() * y.real();
    apply_site_operator(ops.sz, site, dims, spec.states, y);
    const Eigen::MatrixXd mz = r.transpose() * y.real();
    w.p2 = mp.array().square();
    w.z2 = mz.array().square();
  } else {
    apply_site_operator(ops.sp, site, dims, spec.states, y);
    const Eigen::MatrixXcd mp = spec.states.adjoint() * y;
    apply_site_operator(ops.sz, site, dims, spec.states, y);
    const Eigen::MatrixXcd mz = spec.states.adjoint() * y;
    w.p2 = mp.cwiseAbs2();
    w.z2 = mz.cwiseAbs2();
  }
  w.m2 = w.p2.transpose();
  return w;
}

// Strongly connected components of the directed rate graph (edge i -> f iff
// w(f, i) > 0), iterative Tarjan.  Returns component ids, 0-based.
std::vector<int> strongly_connected_components(const Eigen::MatrixXd& w, int& n_components) {
  const int n = static_cast<int>(w.rows());
  constexpr int kUnvisited = -1;
  std::vector<int> index(static_cast<std::size_t>(n), kUnvisited);
  std::vector<int> lowlink(static_cast<std::size_t>(n), 0);
  std::vector<int> component(static_cast<std::size_t>(n), kUnvisited);
  std::vector<bool> on_stack(static_cast<std::size_t>(n), false);
  std::vector<int> stack;
  stack.reserve(static_cast<std::size_t>(n));
  int next_index = 0;
  n_components = 0;

  struct Frame {
    int node;
    int next_child;
  };
  std::vector<Frame> call;
  for (int root = 0; root < n; ++root) {
    if (index[static_cast<std::size_t>(root)] != kUnvisited) continue;
    call.push_back({root, 0});
    while (!call.empty()) {
      Frame& fr = call.back();
      const int v = fr.node;
      if (fr.next_child == 0) {
        index[static_cast<std::size_t>(v)] = lowlink[static_cast<std::size_t>(v)] = next_index++;
        stack.push_back(v);
        on_stack[static_cast<std::size_t>(v)] = true;
      }
      bool descended = false;
      while (fr.next_child < n) {
        const int f = fr.next_child++;
        if (f == v || !(w(f, v) > 0.0)) continue;
        if (index[static_cast<std::size_t>(f)] == kUnvisited) {
          call.push_back({f, 0});
          descended = true;
          break;
        }
        if (on_stack[static_cast<std::size_t>(f)]) {
          lowlink[static_cast<std::size_t>(v)] =
              std::min(lowlink[static_cast<std::size_t>(v)], index[static_cast<std::size_t>(f)]);
        }
      }
      if (descended) continue;
      if (lowlink[static_cast<std::size_t>(v)] == index[static_cast<std::size_t>(v)]) {
        int member = -1;
        do {
          member = stack.back();
          stack.pop_back();
          on_stack[static_cast<std::size_t>(member)] = false;
          component[static_cast<std::size_t>(member)] = n_components;
        } while (member != v);
        ++n_components;
      }
      call.pop_back();
      if (!call.empty()) {
        Frame& parent = call.back();
        lowlink[static_cast<std::size_t>(parent.node)] =
            std::min(lowlink[static_cast<std::size_t>(parent.node)],
                     lowlink[static_cast<std::size_t>(v)]);
      }
    }
  }
  return component;
}

// Stationary distribution restricted to one closed class (columns of the
// generator restricted to the class still sum to zero there).
Eigen::VectorXd class_steady_state(const Eigen::MatrixXd& generator,
                                   const std::vector<int>& members) {
  const Eigen::Index m = static_cast<Eigen::Index>(members.size());
  Eigen::MatrixXd sub(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) {
      sub(r, c) = generator(members[static_cast<std::size_t>(r)],
                            members[static_cast<std::size_t>(c)]);
    }
  }
  Eigen::MatrixXd a = sub;
  a.row(0).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  b(0) = 1.0;
  const Eigen::VectorXd x = Eigen::FullPivLU<Eigen::MatrixXd>(a).solve(b);

  const double scale = std::max(1.0, sub.cwiseAbs().maxCoeff());
  const double residual = (sub * x).cwiseAbs().maxCoeff() / scale;
  const double negativity = -std::min(0.0, x.minCoeff());
  if (!x.allFinite() || residual > 1e-10 || negativity > 1e-10) {
    std::ostringstream msg;
    msg << "steady-state solve failed: relative residual " << residual << ", most negative entry "
        << -negativity << " on a class of " << m << " states";
    throw NumericalError(msg.str());
  }
  Eigen::VectorXd p = x.cwiseMax(0.0);
  p /= p.sum();
  return p;
}

// Mean first-passage time from `start` to the set `absorb` (true entries).
double mean_first_passage(const Eigen::MatrixXd& w, const std::vector<bool>& absorb, int start) {
  const int n = static_cast<int>(w.rows());
  std::vector<int> keep;
  keep.reserve(static_cast<std::size_t>(n));
  std::vector<int> pos(static_cast<std::size_t>(n), -1);
  for (int s = 0; s < n; ++s) {
    if (!absorb[static_cast<std::size_t>(s)]) {
      pos[static_cast<std::size_t>(s)] = static_cast<int>(keep.size());
      keep.push_back(s);
    }
  }
  const Eigen::Index m = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const int s = keep[static_cast<std::size_t>(r)];
    a(r, r) = w.col(s).sum();
    for (Eigen::Index c = 0; c < m; ++c) {
      if (c == r) continue;
      a(r, c) = -w(keep[static_cast<std::size_t>(c)], s);
    }
  }
  const Eigen::VectorXd tau =
      Eigen::FullPivLU<Eigen::MatrixXd>(a).solve(Eigen::VectorXd::Ones(m));
  const double scale =
      1.0 + a.cwiseAbs().maxCoeff() * (m > 0 ? tau.cwiseAbs().maxCoeff() : 0.0);
  const double residual = (a * tau - Eigen::VectorXd::Ones(m)).cwiseAbs().maxCoeff() / scale;
  if (!tau.allFinite() || residual > 1e-8 || tau.minCoeff() < 0.0) {
    std::ostringstream msg;
    msg << "first-passage solve singular or unstable (relative residual " << residual
        << "): the target pocket is unreachable from " << m << " non-absorbed states";
    throw NumericalError(msg.str());
  }
  return tau(pos[static_cast<std::size_t>(start)]);
}

} // namespace

void TransportParams::validate(int n_sites) const {
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(temperature_k) || temperature_k <= 0.0) {
    throw std::invalid_argument("temperature must be finite and positive");
  }
  if (!finite(bias_mv)) throw std::invalid_argument("bias must be finite");
  if (!finite(current_setpoint_pa) || current_setpoint_pa < 0.0) {
    throw std::invalid_argument("current setpoint must be finite and non-negative");
  }
  if (!finite(g_ss_us) || g_ss_us < 0.0) {
    throw std::invalid_argument("substrate conductance must be finite and non-negative");
  }
  if (!finite(tip_polarization) || std::abs(tip_polarization) > 1.0) {
    throw std::invalid_argument("tip polarization must lie in [-1, 1]");
  }
  if (!finite(u0_squared) || u0_squared < 0.0) {
    throw std::invalid_argument("u0_squared must be finite and non-negative");
  }
  if (tip_conductance_us && (!finite(*tip_conductance_us) || *tip_conductance_us < 0.0)) {
    throw std::invalid_argument("tip conductance must be finite and non-negative");
  }
  if (probed_site < 0 || probed_site >= n_sites) {
    std::ostringstream msg;
    msg << "probed site " << probed_site << " out of range [0, " << n_sites << ")";
    throw std::invalid_argument(msg.str());
  }
}

double rate_kernel(double delta_e_mev, double temperature_k) {
  if (!std::isfinite(delta_e_mev)) throw std::invalid_argument("energy must be finite");
  if (!std::isfinite(temperature_k) || temperature_k < 0.0) {
    throw std::invalid_argument("temperature must be finite and non-negative");
  }
  if (temperature_k == 0.0) return std::max(delta_e_mev, 0.0);
  const double kt = constants::k_B * temperature_k;
  const double u = delta_e_mev / kt;
  if (std::abs(u) < 1e-8) return kt * (1.0 + 0.5 * u);
  if (u < -700.0) return 0.0;
  return delta_e_mev / (-std::expm1(-u));
}

TransitionElements transition_elements(const Spectrum& spec, const ChainSpec& chain, int site) {
  check_spectrum_chain(spec, chain);
  check_site(chain, site, "site");
  const SpinMatrices ops = spin_matrices(chain.sites[static_cast<std::size_t>(site)].spin);
  const std::vector<int> dims = chain.site_dims();
  const Eigen::Index k = spec.n_states();

  TransitionElements m;
  Eigen::MatrixXcd y(spec.dim(), k);
  apply_site_operator(ops.sp, site, dims, spec.states, y);
  m.plus = spec.states.adjoint() * y;
  apply_site_operator(ops.sm, site, dims, spec.states, y);
  m.minus = spec.states.adjoint() * y;
  apply_site_operator(ops.sz, site, dims, spec.states, y);
  m.z = spec.states.adjoint() * y;
  m.x = 0.5 * (m.plus + m.minus);
  m.y = std::complex<double>(0.0, -0.5) * (m.plus - m.minus);
  return m;
}

double scattering_intensity(const Spectrum& spec, const ChainSpec& chain, int site, int i,
                            int f) {
  check_spectrum_chain(spec, chain);
  check_site(chain, site, "site");
  if (i < 0 || f < 0 || i >= spec.n_states() || f >= spec.n_states()) {
    throw std::invalid_argument("state index out of range for scattering_intensity");
  }
  const SpinMatrices ops = spin_matrices(chain.sites[static_cast<std::size_t>(site)].spin);
  const std::vector<int> dims = chain.site_dims();
  Eigen::MatrixXcd y(spec.dim(), 1);
  double total = 0.0;
  for (const Eigen::MatrixXcd* op : {&ops.sx, &ops.sy, &ops.sz}) {
    apply_site_operator(*op, site, dims, spec.states.col(i), y);
    total += std::norm(spec.states.col(f).dot(y.col(0)));
  }
  return total;
}

RateMatrix build_rate_matrix(const Spectrum& spec, const ChainSpec& chain,
                             const TransportParams& tp) {
  check_spectrum_chain(spec, chain);
  tp.validate(chain.n_sites());
  const Eigen::Index k = spec.n_states();

  // Pairwise energy differences d(f, i) = E_i - E_f and the three kernels.
  const Eigen::VectorXd e = spec.energies_mev.head(k);
  const Eigen::ArrayXXd d =
      e.transpose().replicate(k, 1).array() - e.replicate(1, k).array();
  const double t = tp.temperature_k;
  const auto kernel = [t](double x) { return rate_kernel(x, t); };
  const Eigen::ArrayXXd ker_fwd = (d + tp.bias_mv).unaryExpr(kernel);
  const Eigen::ArrayXXd ker_bwd = (d - tp.bias_mv).unaryExpr(kernel);
  const Eigen::ArrayXXd ker_sub = d.unaryExpr(kernel);

  double g_tip_s = 0.0;
  if (tp.tip_conductance_us) {
    g_tip_s = *tp.tip_conductance_us * 1e-6;
  } else if (tp.bias_mv != 0.0) {
    g_tip_s = (tp.current_setpoint_pa * 1e-12) / (std::abs(tp.bias_mv) * 1e-3);
  }
  const double pref_tip = tp.u0_squared * g_tip_s * constants::rate_per_siemens_mev;
  const double pref_sub = tp.u0_squared * tp.g_ss_us * 1e-6 * constants::rate_per_siemens_mev;

  // Electron-spin channel weights.  rho_up/dn are the polarized population
  // fractions in the tip; the substrate is unpolarized (1/2 each).
  const double rho_up = 0.5 * (1.0 + tp.tip_polarization);
  const double rho_dn = 0.5 * (1.0 - tp.tip_polarization);

  const ChannelWeights probed = site_channel_weights(spec, chain, tp.probed_site);
  RateMatrix rm;
  rm.tip_to_sample =
      (pref_tip * (0.5 * rho_up * probed.p2 + 0.5 * rho_dn * probed.m2 + 0.5 * probed.z2) *
       ker_fwd)
          .matrix();
  rm.sample_to_tip =
      (pref_tip * (0.5 * rho_dn * probed.p2 + 0.5 * rho_up * probed.m2 + 0.5 * probed.z2) *
       ker_bwd)
          .matrix();

  Eigen::ArrayXXd sub_weight = Eigen::ArrayXXd::Zero(k, k);
  for (int site = 0; site < chain.n_sites(); ++site) {
    const ChannelWeights w =
        site == tp.probed_site ? probed : site_channel_weights(spec, chain, site);
    sub_weight += 0.25 * w.p2 + 0.25 * w.m2 + 0.5 * w.z2;
  }
  rm.substrate = (pref_sub * sub_weight * ker_sub).matrix();

  rm.tip_to_sample.diagonal().setZero();
  rm.sample_to_tip.diagonal().setZero();
  rm.substrate.diagonal().setZero();
  rm.total = rm.tip_to_sample + rm.sample_to_tip + rm.substrate;
  rm.energies_mev = e;
  return rm;
}

SteadyState steady_state(const Eigen::MatrixXd& rates) {
  const Eigen::Index k = rates.rows();
  if (k < 1 || rates.cols() != k) {
    throw std::invalid_argument("rate matrix must be square and non-empty");
  }
  if (!rates.allFinite()) throw std::invalid_argument("rate matrix has non-finite entries");
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index f = 0; f < k; ++f) {
      if (f != i && rates(f, i) < 0.0) {
        throw std::invalid_argument("off-diagonal rates must be non-negative");
      }
    }
  }

  Eigen::MatrixXd generator = rates;
  generator.diagonal().setZero();
  generator.diagonal() = -generator.colwise().sum();

  int n_components = 0;
  const std::vector<int> component = strongly_connected_components(rates, n_components);

  // A class is closed when no member has an outgoing rate leaving the class.
  std::vector<bool> closed(static_cast<std::size_t>(n_components), true);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index f = 0; f < k; ++f) {
      if (f != i && rates(f, i) > 0.0 &&
          component[static_cast<std::size_t>(f)] != component[static_cast<std::size_t>(i)]) {
        closed[static_cast<std::size_t>(component[static_cast<std::size_t>(i)])] = false;
      }
    }
  }

  std::vector<std::vector<int>> closed_members;
  for (int c = 0; c < n_components; ++c) {
    if (!closed[static_cast<std::size_t>(c)]) continue;
    std::vector<int> members;
    for (Eigen::Index s = 0; s < k; ++s) {
      if (component[static_cast<std::size_t>(s)] == c) members.push_back(static_cast<int>(s));
    }
    closed_members.push_back(std::move(members));
  }
  if (closed_members.empty()) {
    throw InternalError("rate graph has no closed communicating class");
  }

  SteadyState out;
  out.n_closed_classes = static_cast<int>(closed_members.size());
  out.populations = Eigen::VectorXd::Zero(k);
  const double class_weight = 1.0 / static_cast<double>(closed_members.size());
  for (const std::vector<int>& members : closed_members) {
    const Eigen::VectorXd p = class_steady_state(generator, members);
    for (std::size_t r = 0; r < members.size(); ++r) {
      out.populations(members[r]) = class_weight * p(static_cast<Eigen::Index>(r));
    }
  }
  if (out.n_closed_classes > 1) {
    std::ostringstream msg;
    msg << "rate matrix is reducible: " << out.n_closed_classes
        << " closed communicating classes, so the stationary distribution is not unique; "
           "returning their equal-weight mixture";
    out.warnings.push_back(msg.str());
  }
  return out;
}

PocketAssignment classify_pockets(const Spectrum& spec, const ChainSpec& chain,
                                  double threshold) {
  check_spectrum_chain(spec, chain);
  if (!(threshold > 0.0) || threshold > 1.0) {
    throw std::invalid_argument("pocket threshold must lie in (0, 1]");
  }
  const double j_sum =
      std::accumulate(chain.couplings_mev.begin(), chain.couplings_mev.end(), 0.0);
  const bool ferromagnetic = j_sum < 0.0;

  const int n = chain.n_sites();
  std::vector<double> m_a(static_cast<std::size_t>(n)), m_b(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    const double spin = chain.sites[static_cast<std::size_t>(s)].spin;
    const double sign = (ferromagnetic || s % 2 == 0) ? -1.0 : 1.0;
    m_a[static_cast<std::size_t>(s)] = sign * spin;
    m_b[static_cast<std::size_t>(s)] = -sign * spin;
  }

  PocketAssignment out;
  out.anchor_a_index = product_state_index(chain, m_a);
  out.anchor_b_index = product_state_index(chain, m_b);
  const Eigen::Index k = spec.n_states();
  out.overlap_a = spec.states.row(out.anchor_a_index).cwiseAbs2().transpose();
  out.overlap_b = spec.states.row(out.anchor_b_index).cwiseAbs2().transpose();
  out.labels.resize(static_cast<std::size_t>(k), PocketLabel::Other);
  for (Eigen::Index s = 0; s < k; ++s) {
    const double oa = out.overlap_a(s);
    const double ob = out.overlap_b(s);
    if (oa > threshold && oa >= ob) {
      out.labels[static_cast<std::size_t>(s)] = PocketLabel::A;
    } else if (ob > threshold) {
      out.labels[static_cast<std::size_t>(s)] = PocketLabel::B;
    }
  }
  return out;
}

PocketLifetimes pocket_lifetimes(const RateMatrix& rates, const PocketAssignment& pockets) {
  const Eigen::Index k = rates.total.rows();
  if (static_cast<Eigen::Index>(pockets.labels.size()) != k) {
    throw std::invalid_argument("pocket labels do not match the rate matrix size");
  }
  int a_star = -1;
  int b_star = -1;
  std::vector<bool> in_a(static_cast<std::size_t>(k), false);
  std::vector<bool> in_b(static_cast<std::size_t>(k), false);
  for (Eigen::Index s = 0; s < k; ++s) {
    const PocketLabel label = pockets.labels[static_cast<std::size_t>(s)];
    if (label == PocketLabel::A) {
      in_a[static_cast<std::size_t>(s)] = true;
      if (a_star < 0) a_star = static_cast<int>(s);
    } else if (label == PocketLabel::B) {
      in_b[static_cast<std::size_t>(s)] = true;
      if (b_star < 0) b_star = static_cast<int>(s);
    }
  }
  if (a_star < 0 || b_star < 0) {
    throw InsufficientDataError(
        "pocket classification left a pocket empty: no state exceeds the overlap threshold "
        "for both pockets, so pocket lifetimes are undefined here");
  }

  PocketLifetimes out;
  out.t_a_s = mean_first_passage(rates.total, in_b, a_star);
  out.t_b_s = mean_first_passage(rates.total, in_a, b_star);
  const double w_ab = rates.total(b_star, a_star);
  const double w_ba = rates.total(a_star, b_star);
  const double inf = std::numeric_limits<double>::infinity();
  out.t_a_two_level_s = w_ab > 0.0 ? 1.0 / w_ab : inf;
  out.t_b_two_level_s = w_ba > 0.0 ? 1.0 / w_ba : inf;
  return out;
}

double average_lifetime(double t_a_s, double t_b_s) {
  if (std::isnan(t_a_s) || std::isnan(t_b_s) || t_a_s < 0.0 || t_b_s < 0.0) {
    throw std::invalid_argument("lifetimes must be non-negative");
  }
  if (std::isinf(t_a_s) && std::isinf(t_b_s)) {
    return std::numeric_limits<double>::infinity();
  }
  return 1.0 / (1.0 / t_a_s + 1.0 / t_b_s);
}

std::vector<LifetimePrediction> lifetime_curve(const ChainSpec& chain,
                                               const std::vector<FieldConfig>& fields,
                                               const TransportParams& tp,
                                               const LifetimeCurveOptions& opts) {
  if (fields.empty()) throw std::invalid_argument("lifetime_curve needs at least one field");
  chain.validate();
  tp.validate(chain.n_sites());
  if (opts.max_states < 2) {
    throw std::invalid_argument("lifetime_curve needs at least two kept states");
  }
  const Eigen::Index dim = chain.hilbert_dim();
  const Eigen::Index k = std::min<Eigen::Index>(opts.max_states, dim);

  std::vector<LifetimePrediction> out;
  out.reserve(fields.size());
  Eigen::MatrixXcd warm;
  for (const FieldConfig& cfg : fields) {
    const Eigen::Vector3d crystal = lab_to_crystal(cfg);
    const std::vector<Eigen::Vector3d> site_fields =
        total_site_fields(crystal, chain, tp.probed_site);
    const ChainHamiltonian op(chain, site_fields);
    const Spectrum full = (opts.warm_start && warm.rows() == dim && warm.cols() == k)
                              ? diagonalize(op, k, opts.eig, warm)
                              : diagonalize(op, k, opts.eig);
    if (opts.warm_start) warm = full.states;
    const Spectrum spec = truncate_spectrum(full, opts.max_states, opts.max_amplitudes);

    LifetimePrediction p;
    p.field_t = crystal;
    p.gap_mev = std::max(0.0, spec.energies_mev(1) - spec.energies_mev(0));
    p.scattering_intensity = scattering_intensity(spec, chain, tp.probed_site, 0, 1);
    p.sx_quanta = sx_quanta(spec.states.col(0), chain);

    const PocketAssignment pockets = classify_pockets(spec, chain, opts.pocket_threshold);
    p.pocket_overlap_a = std::max(pockets.overlap_a(0), pockets.overlap_a(1));
    p.pocket_overlap_b = std::max(pockets.overlap_b(0), pockets.overlap_b(1));
    p.pocket_labels = pockets.labels;

    const RateMatrix rm = build_rate_matrix(spec, chain, tp);
    const PocketLifetimes pl = pocket_lifetimes(rm, pockets);
    p.t_a_s = pl.t_a_s;
    p.t_b_s = pl.t_b_s;
    p.t_avg_s = average_lifetime(pl.t_a_s, pl.t_b_s);
    out.push_back(std::move(p));
  }
  return out;
}

CurrentFit current_decomposition_fit(
    const std::vector<std::pair<double, double>>& current_pa_vs_lifetime_s, double i0_pa) {
  const std::size_t n = current_pa_vs_lifetime_s.size();
  if (n < 3) {
    throw std::invalid_argument("current decomposition needs at least 3 current points");
  }
  if (!std::isfinite(i0_pa) || i0_pa <= 0.0) {
    throw std::invalid_argument("bath current i0 must be finite and positive");
  }
  Eigen::VectorXd x(static_cast<Eigen::Index>(n)), y(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const auto& [current, lifetime] = current_pa_vs_lifetime_s[j];
    if (!std::isfinite(current) || current < 0.0) {
      throw std::invalid_argument("currents must be finite and non-negative");
    }
    if (!std::isfinite(lifetime) || lifetime <= 0.0) {
      throw std::invalid_argument("lifetimes must be finite and positive");
    }
    x(static_cast<Eigen::Index>(j)) = current;
    y(static_cast<Eigen::Index>(j)) = 1.0 / lifetime;
  }
  const double x_mean = x.mean();
  const double y_mean = y.mean();
  const double sxx = (x.array() - x_mean).square().sum();
  if (sxx <= 0.0) {
    throw FitError("current decomposition needs at least two distinct currents");
  }
  const double sxy = ((x.array() - x_mean) * (y.array() - y_mean)).sum();

  CurrentFit fit;
  fit.i0_pa = i0_pa;
  fit.slope = sxy / sxx;
  fit.intercept = y_mean - fit.slope * x_mean;
  fit.r_t = fit.intercept / i0_pa;
  fit.r_o = fit.slope - fit.r_t;

  const Eigen::VectorXd resid = y.array() - (fit.slope * x.array() + fit.intercept);
  const double dof = static_cast<double>(n) - 2.0;
  const double sigma2 = dof > 0.0 ? resid.squaredNorm() / dof : 0.0;
  const double var_slope = sigma2 / sxx;
  const double var_intercept = sigma2 * (1.0 / static_cast<double>(n) + x_mean * x_mean / sxx);
  const double cov = -sigma2 * x_mean / sxx;
  fit.slope_stderr = std::sqrt(var_slope);
  fit.intercept_stderr = std::sqrt(var_intercept);
  fit.r_t_stderr = fit.intercept_stderr / i0_pa;
  fit.r_o_stderr =
      std::sqrt(std::max(0.0, var_slope + var_intercept / (i0_pa * i0_pa) - 2.0 * cov / i0_pa));
  return fit;
}

double bath_current_pa(const TransportParams& tp) {
  return tp.g_ss_us * 1e3 * constants::k_B * tp.temperature_k;
}

} // namespace spinchain
