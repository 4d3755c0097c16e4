#include "spinchain/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "spinchain/errors.hpp"

namespace spinchain {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Uniform [-1, 1) fill for start vectors; mt19937_64 keeps runs reproducible.
template <class Scalar>
void random_fill(Eigen::Ref<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> m,
                 std::mt19937_64& rng) {
  const auto draw = [&rng] { return static_cast<double>(rng() >> 11) * 0x1p-52 - 1.0; };
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) {
      if constexpr (std::is_same_v<Scalar, double>) {
        m(i, j) = draw();
      } else {
        m(i, j) = std::complex<double>(draw(), draw());
      }
    }
}

Spectrum spectrum_from(VectorXd energies, MatrixXcd states, std::vector<int> site_dims,
                       bool real) {
  Spectrum spec;
  spec.energies_mev = std::move(energies);
  spec.states = std::move(states);
  spec.site_dims = std::move(site_dims);
  spec.states_are_real = real;
  for (Index j = 0; j < spec.states.cols(); ++j) fix_phase(spec.states.col(j));
  return spec;
}

// Block Lanczos with full reorthogonalization, Rayleigh-Ritz extraction and
// thick restarts.  Convergence is judged on explicitly formed residual
// vectors for every requested state (two well-shaped products per check, no
// Gram-matrix cancellation floor); checks are spaced adaptively because each
// one also costs an O(m^3) projected eigensolve.
template <class Scalar>
class BlockLanczos {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

public:
  BlockLanczos(const ChainHamiltonian& op, Index k, const EigOptions& opts)
      : op_(op), opts_(opts), n_(op.dim()), k_(std::min(k, n_)) {
    b_ = std::clamp<Index>(opts.block, 1, n_);
    tight_k_ = opts.tight_k < 0 ? k_ : std::min(opts.tight_k, k_);
    // A tall default cap: restarts compact the basis and then pay to
    // re-resolve clustered states, so letting one sweep run to ~4k columns
    // is measurably cheaper than restarting at ~2k.
    mmax_ = opts.max_basis > 0 ? opts.max_basis
                               : std::max({4 * k_, 2 * k_ + 96, k_ + 8 * b_ + 16});
    mmax_ = std::min(std::max(mmax_, k_ + 3 * b_), n_);
    scale_ = std::max(1.0, op.norm_bound());
    grow_basis(mmax_);
  }

  // `warm` seeds the search space (typically the eigenbasis of a nearby
  // Hamiltonian, e.g. the previous point of a field sweep); convergence then
  // needs only a fraction of the basis growth of a cold start.
  Spectrum run(const Mat* warm = nullptr) {
    std::mt19937_64 rng(opts_.seed);
    Mat w;
    if (warm != nullptr && warm->cols() > 0) {
      // Room for the seed plus two full-width residual expansions, so a
      // nearby-Hamiltonian start typically converges without a restart.
      grow_basis(std::min(n_, std::max(mmax_, 3 * warm->cols() + 4 * b_)));
      w = warm->leftCols(std::min<Index>(warm->cols(), mmax_ - 3 * b_));
      warm_mode_ = true;
    } else {
      w.resize(n_, b_);
      random_fill<Scalar>(w, rng);
    }

    // Each convergence check costs an O(m^3) projected eigensolve, so checks
    // are scheduled, not periodic: nothing can converge before m reaches k,
    // and once two checks have measured how fast the worst residual falls
    // per appended column (log-linear to good accuracy for a Krylov chain),
    // the next check is placed just past the predicted convergence point.
    Index next_check_m = std::min(k_, mmax_ - b_);
    double prev_gap = std::numeric_limits<double>::quiet_NaN();
    Index prev_gap_m = 0;
    int restarts = 0;

    while (true) {
      if (m_ + 1 > mmax_) {
        if (++restarts > opts_.max_restarts) {
          char msg[160];
          std::snprintf(msg, sizeof(msg),
                        "eigensolver failed to converge within %d restarts "
                        "(worst residual %.3e, tolerance %.3e)",
                        opts_.max_restarts, worst_residual_, opts_.tol * scale_);
          throw NumericalError(msg);
        }
        thick_restart(w);
        next_check_m = std::min(m_ + 48, mmax_ - b_);
        prev_gap = std::numeric_limits<double>::quiet_NaN(); // compaction changes the decay rate
        if (w.cols() == 0) { // nothing left to target: explore fresh directions
          w.resize(n_, b_);
          random_fill<Scalar>(w, rng);
        }
      }
      append_block(w, rng);

      const bool basis_full = m_ + 1 > mmax_ || m_ == n_;
      bool steered = false;
      if (m_ >= next_check_m || basis_full) {
        if (ritz_converged()) break;
        Index stride = std::max<Index>(24, m_ / 5);
        if (std::isfinite(prev_gap) && worst_gap_ > 1.0 && worst_gap_ < prev_gap) {
          const double decay = (std::log(prev_gap) - std::log(worst_gap_)) //
                               / static_cast<double>(m_ - prev_gap_m);
          if (decay > 1e-12) {
            // Columns until the worst gap reaches 1, plus margin: a slightly
            // late check wastes a few cheap columns, an early one wastes a
            // whole projected solve.
            const double need = std::log(worst_gap_) / decay;
            stride = std::clamp<Index>(static_cast<Index>(1.15 * need) + 8, 24, m_ / 2 + 64);
          }
        }
        prev_gap = worst_gap_;
        prev_gap_m = m_;
        next_check_m = m_ + stride;
        // A warm seed is continued with full-width residual expansions:
        // every seeded state needs its own small correction, and a narrow
        // block would drip-feed them.  Cold runs stay on the plain Krylov
        // recurrence below -- interrupting the chain resets its polynomial
        // acceleration and measurably slows convergence.
        if (warm_mode_) {
          w = unconverged_ritz_images(std::max(b_, mmax_ - m_ - b_));
          steered = w.cols() > 0;
        }
      }
      if (!steered) w = continuation_block();
    }
    return extract();
  }

private:
  // (Re)allocates the basis buffers for `cap` columns; only legal before any
  // block has been appended.
  void grow_basis(Index cap) {
    mmax_ = cap;
    v_.resize(n_, mmax_);
    hv_.resize(n_, mmax_);
    t_ = Mat::Zero(mmax_, mmax_);
  }

  void orthogonalize_against_basis(Mat& w) const {
    if (m_ == 0) return;
    const auto v = v_.leftCols(m_);
    // Local pre-pass: in steady operation w = H * (previous block) overlaps
    // essentially only the last few blocks, so removing that part first
    // leaves the full pass below as a small correction...
    const Index loc = std::min<Index>(3 * b_, m_);
    const auto vl = v_.middleCols(m_ - loc, loc);
    w.noalias() -= vl * (vl.adjoint() * w).eval();
    const auto before = w.colwise().norm().eval();
    w.noalias() -= v * (v.adjoint() * w).eval();
    // ...and a second full pass is needed only when a column shrank enough
    // for the classical "twice is enough" criterion to demand it (restarts
    // and steered blocks, mostly).
    double shrink = 1.0;
    for (Index j = 0; j < w.cols(); ++j) {
      const double b0 = before(j);
      shrink = std::min(shrink, b0 > 0.0 ? w.col(j).norm() / b0 : 0.0);
    }
    if (shrink < 0.707) w.noalias() -= v * (v.adjoint() * w).eval();
  }

  // Orthonormalizes w in place; near-null columns are replaced with fresh
  // random directions so the basis keeps growing even when a block lands
  // inside an invariant subspace.  Narrow blocks (the routine Krylov case)
  // take a cheap fixed two-pass MGS; wide blocks -- residual expansions and
  // warm seeds, whose columns can be strongly parallel -- go through a
  // shrink-monitored loop that reorthogonalizes (against the basis and the
  // earlier columns jointly) until a pass no longer removes anything, since a
  // fixed pass count demonstrably lets orthogonality rot at high column
  // counts and everything downstream silently degrades with it.
  void orthonormalize_block(Mat& w, std::mt19937_64& rng) const {
    if (w.cols() <= 2 * b_) {
      for (Index j = 0; j < w.cols(); ++j) {
        for (int attempt = 0; attempt < 4; ++attempt) {
          for (int pass = 0; pass < 2; ++pass)
            for (Index i = 0; i < j; ++i) w.col(j) -= w.col(i) * (w.col(i).dot(w.col(j)));
          const double norm = w.col(j).norm();
          if (norm > 1e-8) {
            w.col(j) /= norm;
            break;
          }
          random_fill<Scalar>(w.col(j), rng);
          Mat col = w.col(j);
          orthogonalize_against_basis(col);
          w.col(j) = col;
        }
      }
      return;
    }
    const auto v = v_.leftCols(m_);
    for (Index j = 0; j < w.cols(); ++j) {
      auto col = w.col(j);
      bool done = false;
      for (int attempt = 0; attempt < 3 && !done; ++attempt) {
        const double norm0 = col.norm();
        if (norm0 > std::numeric_limits<double>::min()) {
          col /= norm0;
          double cum = 1.0; // total shrink: the sine of the entry angle
          for (int pass = 0; pass < 6; ++pass) {
            if (m_ > 0) col.noalias() -= v * (v.adjoint() * col).eval();
            for (Index i = 0; i < j; ++i) col -= w.col(i) * (w.col(i).dot(col));
            const double after = col.norm();
            cum *= after;
            if (cum < 1e-11) break; // numerically inside the span: replace
            col /= after;
            if (pass >= 1 && after > 0.707) { // pass removed nothing: done
              done = true;
              break;
            }
          }
        }
        if (!done) random_fill<Scalar>(col, rng);
      }
      if (!done) throw NumericalError("failed to orthonormalize an expansion block");
    }
  }

  void append_block(Mat w, std::mt19937_64& rng) {
    const Index c = std::min<Index>(w.cols(), mmax_ - m_);
    w.conservativeResize(Eigen::NoChange, c);
    orthogonalize_against_basis(w);
    orthonormalize_block(w, rng);

    v_.middleCols(m_, c) = w;
    auto hq = hv_.middleCols(m_, c);
    op_.apply(Eigen::Ref<const Mat>(w), hq);

    const Index mc = m_ + c;
    t_.block(0, m_, mc, c).noalias() = v_.leftCols(mc).adjoint() * hq;
    t_.block(m_, 0, c, m_) = t_.block(0, m_, m_, c).adjoint();
    t_.block(m_, m_, c, c) =
        0.5 * (t_.block(m_, m_, c, c) + t_.block(m_, m_, c, c).adjoint()).eval();

    m_ = mc;
    last_block_ = c;
    ritz_fresh_ = false;
  }

  // Solves the projected problem and tests convergence of the requested
  // eigenpairs on explicitly formed residuals; records per-state flags (used
  // to pick restart/expansion directions) and caches the Ritz decomposition
  // for extract()/restarts.
  bool ritz_converged() {
    solve_projected();
    const Index kk = std::min(k_, m_);
    converged_.assign(static_cast<std::size_t>(kk), 0);
    if (m_ == n_) { // full space spanned: Rayleigh-Ritz is exact
      worst_residual_ = 0.0;
      worst_gap_ = 0.0;
      converged_.assign(static_cast<std::size_t>(kk), 1);
      return true;
    }
    if (m_ < k_) return false;

    // Everything wanted lies at or below the top Ritz value (Poincare
    // separation: theta_j >= lambda_j), so the continuation filter may damp
    // the spectrum above it without touching a requested state.
    filter_split_ = theta_(kk - 1);

    const double tight_tol = std::max(opts_.tol, 5e-13) * scale_;
    const double loose_tol = std::max(opts_.loose_tol, 5e-13) * scale_;
    const Index tk = std::min(tight_k_, kk);

    Mat resid = hv_.leftCols(m_) * s_.leftCols(kk);
    const Mat vs = v_.leftCols(m_) * s_.leftCols(kk);
    bool all = true;
    worst_residual_ = 0.0;
    worst_gap_ = 0.0;
    for (Index j = 0; j < kk; ++j) {
      resid.col(j) -= theta_(j) * vs.col(j);
      const double r = resid.col(j).norm();
      const double tol = j < tk ? tight_tol : loose_tol;
      worst_residual_ = std::max(worst_residual_, r);
      worst_gap_ = std::max(worst_gap_, r / tol);
      converged_[static_cast<std::size_t>(j)] = r <= tol;
      all = all && r <= tol;
    }
    return all;
  }

  // Next expansion block for the Krylov recurrence: the image of the last
  // block under H or, when the mild Chebyshev filter is enabled and a Ritz
  // pass has bounded the wanted window from above, under T_d((H-c)/e), which
  // amplifies the window against the rest of the spectrum.  Only low degrees
  // are safe: aggressive filters align every column with the same few
  // dominant directions, and the block degenerates into cancellation noise
  // after projection.  The T update stays exact for any degree because
  // append_block forms H*q explicitly.
  Mat continuation_block() const {
    const Index c = last_block_;
    const double hi = scale_; // norm bound: at or above the top eigenvalue
    const auto hx = hv_.middleCols(m_ - c, c);
    if (opts_.filter_degree <= 1 || !(filter_split_ < hi - 1e-9 * scale_)) return hx;

    const double center = 0.5 * (hi + filter_split_);
    const double half = 0.5 * (hi - filter_split_);
    Mat prev = v_.middleCols(m_ - c, c); // T_0 x
    Mat cur = (hx - center * prev) / half; // T_1 x
    Mat hy(n_, c);
    for (int d = 1; d < opts_.filter_degree; ++d) {
      op_.apply(Eigen::Ref<const Mat>(cur), hy);
      prev = ((2.0 / half) * (hy - center * cur) - prev).eval();
      prev.swap(cur);
    }
    return cur;
  }

  void solve_projected() {
    if (ritz_fresh_) return;
    Eigen::SelfAdjointEigenSolver<Mat> es(t_.topLeftCorner(m_, m_));
    if (es.info() != Eigen::Success) throw NumericalError("projected eigenproblem failed");
    theta_ = es.eigenvalues();
    s_ = es.eigenvectors();
    ritz_fresh_ = true;
  }

  // Images H*y of the lowest not-yet-converged Ritz vectors (at most `count`,
  // possibly none); the parts inside span(V) are projected away on append,
  // leaving their residuals, which point where the subspace still needs to
  // grow.
  Mat unconverged_ritz_images(Index count) const {
    std::vector<int> sel;
    for (Index j = 0; j < std::min(m_, static_cast<Index>(converged_.size())); ++j) {
      if (converged_[static_cast<std::size_t>(j)]) continue;
      sel.push_back(static_cast<int>(j));
      if (static_cast<Index>(sel.size()) == count) break;
    }
    const Index csel = static_cast<Index>(sel.size());
    Mat s_sel(m_, csel);
    for (Index j = 0; j < csel; ++j) s_sel.col(j) = s_.col(sel[static_cast<std::size_t>(j)]);
    return hv_.leftCols(m_) * s_sel;
  }

  void thick_restart(Mat& w) {
    solve_projected();
    // Keep a generous fraction of the basis: slimmer restarts stagnate on
    // clustered interior states.
    const Index kr = std::clamp((mmax_ + k_) / 2, std::min(k_ + 2 * b_, m_ - b_), m_ - b_);
    w = unconverged_ritz_images(std::min<Index>(b_, m_ - kr));

    v_.leftCols(kr) = (v_.leftCols(m_) * s_.leftCols(kr)).eval();
    hv_.leftCols(kr) = (hv_.leftCols(m_) * s_.leftCols(kr)).eval();
    t_.setZero();
    t_.topLeftCorner(kr, kr).diagonal() = theta_.head(kr).template cast<Scalar>();
    m_ = kr;
    last_block_ = std::min(b_, kr);
    ritz_fresh_ = false;
    warm_mode_ = false; // restarting means the seed did not suffice: go classic
  }

  Spectrum extract() {
    solve_projected();
    const Index kk = std::min(k_, m_);
    Mat x = v_.leftCols(m_) * s_.leftCols(kk);
    for (Index j = 0; j < kk; ++j) x.col(j) /= x.col(j).norm();
    MatrixXcd states = x.template cast<std::complex<double>>();
    return spectrum_from(theta_.head(kk), std::move(states), op_.site_dims(),
                         std::is_same_v<Scalar, double>);
  }

  const ChainHamiltonian& op_;
  EigOptions opts_;
  Index n_, k_, b_ = 4, tight_k_ = 0, mmax_ = 0;
  double scale_ = 1.0;
  Index m_ = 0, last_block_ = 0;
  double worst_residual_ = 0.0;
  double filter_split_ = std::numeric_limits<double>::quiet_NaN();
  double worst_gap_ = std::numeric_limits<double>::infinity(); // max residual/tolerance
  bool ritz_fresh_ = false;
  bool warm_mode_ = false;
  std::vector<char> converged_;
  Mat v_, hv_, t_;
  VectorXd theta_;
  Mat s_;
};

} // namespace

Spectrum diagonalize(const MatrixXcd& h, std::optional<Index> k, const std::vector<int>& site_dims) {
  if (h.rows() != h.cols()) throw std::invalid_argument("Hamiltonian must be square");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("Hamiltonian must be Hermitian");
  const Index kk = k.value_or(h.rows());
  if (kk < 1 || kk > h.rows()) throw std::invalid_argument("requested state count out of range");

  const bool real = h.imag().cwiseAbs().maxCoeff() <= 1e-14 * scale;
  VectorXd energies;
  MatrixXcd states;
  if (real) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(h.real());
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
    energies = es.eigenvalues().head(kk);
    states = es.eigenvectors().leftCols(kk).cast<std::complex<double>>();
  } else {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
    energies = es.eigenvalues().head(kk);
    states = es.eigenvectors().leftCols(kk);
  }
  return spectrum_from(std::move(energies), std::move(states), site_dims, real);
}

Spectrum diagonalize(const ChainHamiltonian& op, Index k, const EigOptions& opts) {
  const Index n = op.dim();
  if (k < 1) throw std::invalid_argument("requested state count out of range");
  k = std::min(k, n);
  if ((n <= opts.dense_cutoff || k > n / 2) && n <= 4096)
    return diagonalize(op.dense(), k, op.site_dims());
  if (op.is_real()) return BlockLanczos<double>(op, k, opts).run();
  return BlockLanczos<std::complex<double>>(op, k, opts).run();
}

Spectrum diagonalize(const ChainHamiltonian& op, Index k, const EigOptions& opts,
                     const MatrixXcd& warm_start) {
  const Index n = op.dim();
  if (k < 1) throw std::invalid_argument("requested state count out of range");
  if (warm_start.rows() != n)
    throw std::invalid_argument("warm start dimension does not match the Hamiltonian");
  k = std::min(k, n);
  if ((n <= opts.dense_cutoff || k > n / 2) && n <= 4096)
    return diagonalize(op.dense(), k, op.site_dims());
  if (op.is_real()) {
    // A real operator keeps the whole iteration real; warm vectors from a
    // nearby real Hamiltonian carry (numerically) zero imaginary parts, and
    // any genuinely complex input still seeds useful real directions.
    const MatrixXd w0 = warm_start.real();
    return BlockLanczos<double>(op, k, opts).run(&w0);
  }
  return BlockLanczos<std::complex<double>>(op, k, opts).run(&warm_start);
}

} // namespace spinchain
