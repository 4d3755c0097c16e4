#include "spinchain/diabolic.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "spinchain/constants.hpp"
#include "spinchain/geometry.hpp"
#include "spinchain/hamiltonian.hpp"
#include "spinchain/spin_ops.hpp"

namespace spinchain {

namespace {

// Lowest-k spectrum of the chain in a uniform external field (crystal frame)
// plus the chain's stored tip fields.
Spectrum low_spectrum(const ChainSpec& chain, const Eigen::Vector3d& external_field_t,
                      Eigen::Index k, const EigOptions& eig) {
  const auto fields = total_site_fields(external_field_t, chain);
  const ChainHamiltonian op(chain, fields);
  return diagonalize(op, k, eig);
}

double gap_at_field(const ChainSpec& chain, const Eigen::Vector3d& external_field_t,
                    const EigOptions& eig) {
  const Spectrum s = low_spectrum(chain, external_field_t, 2, eig);
  return std::max(0.0, s.energies_mev(1) - s.energies_mev(0));
}

// Per-site pi rotation about x: U diag(exp(i pi m)) U^H built in the S_x
// eigenbasis.  The product over sites commutes with every anisotropy and
// exchange term and with x-directed Zeeman terms, so it is an exact symmetry
// of the transverse-field configuration.
Eigen::MatrixXcd pix_matrix(double spin) {
  const SpinMatrices ops = spin_matrices(spin);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(ops.sx);
  Eigen::VectorXcd phases(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < phases.size(); ++i)
    phases(i) = std::exp(std::complex<double>(0.0, M_PI * es.eigenvalues()(i)));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

// Copy of the chain with the symmetry-breaking tip-field components (y and z)
// removed.  Crossings are located on this configuration; the full
// configuration only enters through the residual gap reported at each point.
ChainSpec symmetric_part(const ChainSpec& chain) {
  ChainSpec sym = chain;
  for (auto& site : sym.sites) {
    site.tip_field_T.y() = 0.0;
    site.tip_field_T.z() = 0.0;
  }
  return sym;
}

// Upper bound (meV) on the splitting the symmetry-breaking field components
// (longitudinal external field plus y/z tip components) can open at a
// crossing: 2 mu_B sum_i S_i g_i (|B_y,i| + |B_z,i|), since each
// |<psi0|S_y,i|psi1>| and |<psi0|S_z,i|psi1>| is at most S_i.
double zeeman_gap_floor(const ChainSpec& chain, double bz_t) {
  const auto fields = total_site_fields(Eigen::Vector3d(0.0, 0.0, bz_t), chain);
  double sum = 0.0;
  for (std::size_t i = 0; i < chain.sites.size(); ++i)
    sum += chain.sites[i].spin * chain.sites[i].g *
           (std::abs(fields[i].y()) + std::abs(fields[i].z()));
  return 2.0 * constants::mu_B * sum;
}

// Signed spin-flip gap at transverse field bx on a Pi_x-symmetric chain.
// The two lowest states are resolved into the two Pi_x symmetry classes by
// diagonalizing the 2x2 restriction of the parity operator on their span;
// the result is E(class A) - E(class B) with a field-independent, hence
// globally consistent, class assignment.  Unlike the bare E1 - E0 this is a
// smooth function of bx that changes sign transversally at every crossing,
// so crossings can be located by bisection even when the doublet splitting
// sits far below the eigensolver's absolute accuracy.
double parity_signed_gap(const ChainSpec& sym, double bx, const EigOptions& eig) {
  const Spectrum sp = low_spectrum(sym, Eigen::Vector3d(bx, 0.0, 0.0), 2, eig);
  const auto dims = sym.site_dims();
  Eigen::MatrixXcd y = sp.states, t(y.rows(), y.cols());
  for (std::size_t i = 0; i < sym.sites.size(); ++i) {
    apply_site_operator(pix_matrix(sym.sites[i].spin), static_cast<int>(i), dims, y, t);
    y.swap(t);
  }
  Eigen::Matrix2cd p;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) p(a, b) = sp.states.col(a).dot(y.col(b));
  // On an invariant span p is unitary with eigenvalues {lambda, -lambda};
  // lambda depends only on the chain's spin content, not on the field.
  Eigen::ComplexEigenSolver<Eigen::Matrix2cd> es(p);
  const auto vals = es.eigenvalues();
  const auto vecs = es.eigenvectors();
  // Stable class order: larger real part first; fall back to the imaginary
  // part when the eigenvalues sit near the imaginary axis (half-integer
  // total spin content).
  int first = 0;
  if (std::abs(vals(0).real() - vals(1).real()) > 0.5)
    first = vals(0).real() > vals(1).real() ? 0 : 1;
  else
    first = vals(0).imag() > vals(1).imag() ? 0 : 1;
  double e[2];
  for (int k = 0; k < 2; ++k) {
    const Eigen::Vector2cd v = vecs.col(k).normalized();
    e[k] = std::norm(v(0)) * sp.energies_mev(0) + std::norm(v(1)) * sp.energies_mev(1);
  }
  return e[first] - e[1 - first];
}

// Golden-section minimization of |f| on [a, b]; returns the bracket midpoint
// once the bracket is narrower than tol.  Used for crossings that only touch
// zero (see find_dps), where |s| has a conical dip rather than a sign change.
template <class F>
double golden_min_abs(F&& f, double a, double b, double tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = std::abs(f(c));
  double fd = std::abs(f(d));
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = std::abs(f(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = std::abs(f(d));
    }
  }
  return 0.5 * (a + b);
}

// Number of S_x quanta the ground-state label advances by when passing a
// crossing: simultaneous crossings of m independent pairs meet in a
// 2^m-dimensional degenerate space, and the label advances by m.
int crossing_multiplicity(const ChainSpec& sym, double bx_root, double deg_tol_mev,
                          const EigOptions& eig) {
  const auto dim = sym.hilbert_dim();
  const Eigen::Index k = std::min<Eigen::Index>(dim, 16);
  if (k < 2) return 1;
  const Spectrum sp = low_spectrum(sym, Eigen::Vector3d(bx_root, 0.0, 0.0), k, eig);
  int count = 1;
  for (Eigen::Index j = 1; j < k; ++j)
    if (sp.energies_mev(j) - sp.energies_mev(0) <= deg_tol_mev) ++count;
  if (count < 2) return 1;
  return std::max(1, static_cast<int>(std::lround(std::log2(static_cast<double>(count)))));
}

// Largest admissible odd crossing index for this spin (3 for spin 2).
int highest_dp_index(double spin) {
  const int cap = static_cast<int>(std::lround(2.0 * spin)) - 1;
  if (cap < 1)
    throw std::invalid_argument("no transverse crossing exists below spin 1");
  return (cap % 2 == 1) ? cap : cap - 1;
}

} // namespace

double single_atom_dp(double d_mev, double e_mev, double g, int n, double spin) {
  if (!std::isfinite(d_mev) || !std::isfinite(e_mev) || !std::isfinite(g) ||
      !std::isfinite(spin))
    throw std::invalid_argument("single_atom_dp: non-finite input");
  const double two_s = 2.0 * spin;
  if (!(spin > 0) || std::abs(two_s - std::round(two_s)) > 1e-9)
    throw std::invalid_argument("single_atom_dp: spin must be a positive half-integer");
  if (!(g > 0)) throw std::invalid_argument("single_atom_dp: g must be positive");
  const int n_cap = static_cast<int>(std::lround(two_s)) - 1;
  if (n == 0 || n % 2 == 0 || std::abs(n) > n_cap)
    throw std::invalid_argument(
        "single_atom_dp: index must be odd and nonzero with |n| <= 2*spin - 1");
  const double product = 2.0 * e_mev * (e_mev - d_mev);
  if (product < 0.0)
    throw std::domain_error("single_atom_dp: E(E - D) < 0 admits no real crossing field");
  return static_cast<double>(n) * std::sqrt(product) / (g * constants::mu_B);
}

double gap_function(const ChainSpec& chain, const Eigen::Vector3d& field_dir,
                    double b_t, const EigOptions& eig) {
  chain.validate();
  if (!std::isfinite(b_t)) throw std::invalid_argument("gap_function: field must be finite");
  const double norm = field_dir.norm();
  if (!std::isfinite(norm) || norm <= 0.0)
    throw std::invalid_argument("gap_function: field direction must be a nonzero vector");
  return gap_at_field(chain, (b_t / norm) * field_dir, eig);
}

std::vector<DiabolicPoint> find_dps(const ChainSpec& chain, double bx_min, double bx_max,
                                    double bz_t, double resolution_t,
                                    const DpSearchOptions& opts) {
  chain.validate();
  long half_units = 0;
  for (const auto& site : chain.sites)
    half_units += std::lround(2.0 * site.spin);
  if (half_units % 2 != 0)
    throw std::invalid_argument(
        "find_dps: half-integer total spin keeps every level doubly degenerate at "
        "transverse fields, so a lowest-pair crossing search is ill-defined");
  if (!std::isfinite(bx_min) || !std::isfinite(bx_max) || !(bx_min < bx_max))
    throw std::invalid_argument("find_dps: need a finite window with bx_min < bx_max");
  if (!std::isfinite(bz_t)) throw std::invalid_argument("find_dps: bz must be finite");
  if (!std::isfinite(resolution_t) || !(resolution_t > 0.0))
    throw std::invalid_argument("find_dps: resolution must be positive");
  if (!(opts.gap_tolerance_mev > 0.0) || !(opts.refine_tol_t > 0.0))
    throw std::invalid_argument("find_dps: tolerances must be positive");

  const double span = bx_max - bx_min;
  if (resolution_t > 0.5 * span)
    throw std::invalid_argument("find_dps: window must span at least two resolution steps");
  const double cells = std::ceil(span / resolution_t);
  if (cells > 2e6)
    throw std::invalid_argument("find_dps: window/resolution asks for more than 2e6 grid points");
  const auto n_grid = static_cast<Eigen::Index>(cells) + 1;
  const double step = span / static_cast<double>(n_grid - 1);

  const ChainSpec sym = symmetric_part(chain);
  const auto signed_gap = [&](double bx) { return parity_signed_gap(sym, bx, opts.eig); };

  Eigen::VectorXd s(n_grid);
  for (Eigen::Index i = 0; i < n_grid; ++i)
    s(i) = signed_gap(bx_min + step * static_cast<double>(i));

  // Bracket every sign change of the signed gap and bisect it down to the
  // refinement tolerance; a zero sample is itself a crossing.
  std::vector<double> roots;
  for (Eigen::Index i = 0; i < n_grid; ++i) {
    const double xi = bx_min + step * static_cast<double>(i);
    if (s(i) == 0.0) {
      roots.push_back(xi);
      continue;
    }
    if (i + 1 >= n_grid || s(i + 1) == 0.0) continue;
    if (std::signbit(s(i)) == std::signbit(s(i + 1))) continue;
    double lo = xi, hi = xi + step;
    bool lo_neg = std::signbit(s(i));
    for (int it = 0; it < 80 && hi - lo > opts.refine_tol_t; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double sm = signed_gap(mid);
      if (sm == 0.0) {
        lo = hi = mid;
        break;
      }
      if (std::signbit(sm) == lo_neg) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    roots.push_back(0.5 * (lo + hi));
  }

  // Simultaneous crossings of an even number of pairs flip the total parity
  // an even number of times, so the signed gap only touches zero there: a
  // conical dip with no sign change.  Hunt those separately as local minima
  // of |s| that refine all the way down to the gap tolerance.
  for (Eigen::Index i = 1; i + 1 < n_grid; ++i) {
    const double a0 = std::abs(s(i - 1)), a1 = std::abs(s(i)), a2 = std::abs(s(i + 1));
    if (s(i) == 0.0) continue;       // already recorded as an exact root
    if (a1 > a0 || a1 > a2) continue; // not a dip
    if (std::signbit(s(i - 1)) != std::signbit(s(i)) ||
        std::signbit(s(i)) != std::signbit(s(i + 1)))
      continue; // a sign change owns this neighborhood
    if (a1 >= 0.5 * std::max(a0, a2)) continue; // flat stretch, not a dip
    const double a = bx_min + step * static_cast<double>(i - 1);
    const double b = bx_min + step * static_cast<double>(i + 1);
    const double x = golden_min_abs(signed_gap, a, b, opts.refine_tol_t);
    if (std::abs(signed_gap(x)) < opts.gap_tolerance_mev) roots.push_back(x);
  }

  std::sort(roots.begin(), roots.end());
  const double merge_radius = std::max(4.0 * opts.refine_tol_t, 1e-9);
  std::vector<double> merged;
  for (const double r : roots) {
    if (!merged.empty() && r - merged.back() < merge_radius) continue;
    merged.push_back(r);
  }

  // A located crossing is genuine when the full configuration's gap there is
  // explained by the symmetry-breaking field components alone.
  const double threshold = opts.gap_tolerance_mev + zeeman_gap_floor(chain, bz_t);
  std::vector<DiabolicPoint> points;
  for (const double r : merged) {
    const double full_gap = gap_at_field(chain, Eigen::Vector3d(r, 0.0, bz_t), opts.eig);
    if (full_gap >= threshold) continue;
    DiabolicPoint p;
    p.bx_t = r;
    p.index_j = static_cast<int>(points.size()) + 1;
    p.gap_at_point_mev = full_gap;
    points.push_back(p);
  }

  if (opts.label_sectors && !points.empty()) {
    // Anchor the label at the window start, then advance it across each
    // crossing by the crossing's multiplicity.  A mixed anchor (ground-state
    // S_x expectation too far from any integer) leaves every label unset.
    const Spectrum anchor_sp =
        low_spectrum(sym, Eigen::Vector3d(bx_min, 0.0, 0.0), 2, opts.eig);
    const std::optional<int> anchor = sx_quanta(anchor_sp.states.col(0), chain);
    if (anchor) {
      const double deg_tol = std::max(100.0 * opts.gap_tolerance_mev, 1e-8);
      int label = *anchor;
      for (auto& p : points) {
        label += crossing_multiplicity(sym, p.bx_t, deg_tol, opts.eig);
        p.sx_quanta_after = label;
      }
    }
  }
  return points;
}

DpAtlas dp_atlas(const std::vector<int>& n_list, const std::vector<double>& ratio_list,
                 const SiteParams& base_site, const DpAtlasOptions& opts) {
  if (n_list.empty() || ratio_list.empty())
    throw std::invalid_argument("dp_atlas: need at least one length and one coupling ratio");
  if (!(opts.bx_max_factor > 0.0) || !(opts.bx_min_t > 0.0))
    throw std::invalid_argument("dp_atlas: window bounds must be positive");

  SiteParams site = base_site;
  site.tip_field_T.setZero();

  const int n_top = highest_dp_index(site.spin);
  const double bx_top = single_atom_dp(site.d_mev, site.e_mev, site.g, n_top, site.spin);
  const double bx_max = opts.bx_max_factor * bx_top;
  const double resolution = opts.resolution_t > 0.0 ? opts.resolution_t : bx_top / 400.0;
  if (!(opts.bx_min_t < bx_max))
    throw std::invalid_argument("dp_atlas: empty scan window");

  std::vector<int> lengths = n_list;
  std::sort(lengths.begin(), lengths.end());
  lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());
  std::vector<double> ratios = ratio_list;
  std::sort(ratios.begin(), ratios.end());
  ratios.erase(std::unique(ratios.begin(), ratios.end()), ratios.end());

  DpAtlas atlas;
  for (const int n : lengths) {
    if (n < 1) throw std::invalid_argument("dp_atlas: chain lengths must be >= 1");
    for (const double ratio : ratios) {
      if (!std::isfinite(ratio))
        throw std::invalid_argument("dp_atlas: coupling ratios must be finite");
      ChainSpec chain = uniform_chain(n, site, ratio * std::abs(site.d_mev));
      const std::int64_t dim = chain.hilbert_dim();
      if (dim < 0 || dim > chain.dimension_cap) {
        atlas.warnings.push_back("dp_atlas: skipped N=" + std::to_string(n) +
                                 ", J/|D|=" + std::to_string(ratio) +
                                 ": Hilbert dimension exceeds the cap of " +
                                 std::to_string(chain.dimension_cap));
        continue;
      }
      const auto points =
          find_dps(chain, opts.bx_min_t, bx_max, 0.0, resolution, opts.search);
      for (const auto& p : points) {
        DpAtlasRow row;
        row.n_sites = n;
        row.j_over_abs_d = ratio;
        row.index_j = p.index_j;
        row.bx_t = p.bx_t;
        row.bx_over_bx3 = p.bx_t / bx_top;
        row.gap_mev = p.gap_at_point_mev;
        row.sx_quanta_after = p.sx_quanta_after;
        atlas.rows.push_back(row);
      }
    }
  }
  return atlas;
}

double total_sx_expectation(const Eigen::Ref<const Eigen::VectorXcd>& state,
                            const ChainSpec& chain) {
  chain.validate();
  if (state.size() != chain.hilbert_dim())
    throw std::invalid_argument("total_sx_expectation: state does not match chain dimension");
  if (std::abs(state.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("total_sx_expectation: state must be normalized");
  const auto dims = chain.site_dims();
  const Eigen::MatrixXcd x = state;
  Eigen::MatrixXcd y(state.size(), 1);
  double total = 0.0;
  for (std::size_t i = 0; i < chain.sites.size(); ++i) {
    const SpinMatrices ops = spin_matrices(chain.sites[i].spin);
    apply_site_operator(ops.sx, static_cast<int>(i), dims, x, y);
    total += state.dot(y.col(0)).real();
  }
  return total;
}

std::optional<int> sx_quanta(const Eigen::Ref<const Eigen::VectorXcd>& state,
                             const ChainSpec& chain) {
  const double q = std::abs(total_sx_expectation(state, chain));
  const double nearest = std::round(q);
  if (std::abs(q - nearest) > 0.25) return std::nullopt;
  return static_cast<int>(nearest);
}

} // namespace spinchain
