#include "spinchain/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "spinchain/errors.hpp"

namespace spinchain {

using Eigen::Index;

void fix_phase(Eigen::Ref<Eigen::VectorXcd> state) {
  Index pivot = 0;
  double best = -1.0;
  for (Index i = 0; i < state.size(); ++i) {
    const double a = std::abs(state(i));
    if (a > best + 1e-12) { // strictly-larger with margin: ties keep the earliest index
      best = a;
      pivot = i;
    }
  }
  if (best <= 0.0) return;
  const std::complex<double> amp = state(pivot);
  state *= std::conj(amp) / std::abs(amp);
}

void Spectrum::check_invariants() const {
  if (energies_mev.size() != states.cols())
    throw InternalError("spectrum: energy/state count mismatch");
  for (Index i = 0; i + 1 < energies_mev.size(); ++i)
    if (energies_mev(i) > energies_mev(i + 1) + 1e-12 * (1.0 + std::abs(energies_mev(i))))
      throw InternalError("spectrum: energies not ascending");
  if (truncation) return; // truncated states are renormalized but no longer orthogonal
  for (Index j = 0; j < states.cols(); ++j) {
    if (std::abs(states.col(j).norm() - 1.0) > 1e-10)
      throw InternalError("spectrum: state " + std::to_string(j) + " not normalized");
    for (Index i = 0; i < j; ++i)
      if (std::abs(states.col(i).dot(states.col(j))) > 1e-8)
        throw InternalError("spectrum: states " + std::to_string(i) + "," + std::to_string(j) +
                            " not orthogonal");
  }
}

Spectrum truncate_spectrum(const Spectrum& spec, Index n_states, Index n_amplitudes) {
  if (n_states <= 0 || n_amplitudes <= 0)
    throw std::invalid_argument("truncation counts must be positive");
  const Index keep_states = std::min(n_states, spec.n_states());
  const Index keep_amps = std::min(n_amplitudes, spec.dim());

  Spectrum out;
  out.energies_mev = spec.energies_mev.head(keep_states);
  out.site_dims = spec.site_dims;
  out.states_are_real = spec.states_are_real;
  out.states = Eigen::MatrixXcd::Zero(spec.dim(), keep_states);
  out.truncation = TruncationInfo{keep_states, keep_amps};

  std::vector<Index> order(static_cast<std::size_t>(spec.dim()));
  for (Index j = 0; j < keep_states; ++j) {
    std::iota(order.begin(), order.end(), Index{0});
    const auto& col = spec.states.col(j);
    // Deterministic selection: by descending modulus, index breaking ties.
    std::partial_sort(order.begin(), order.begin() + keep_amps, order.end(),
                      [&](Index a, Index b) {
                        const double ma = std::abs(col(a)), mb = std::abs(col(b));
                        if (ma != mb) return ma > mb;
                        return a < b;
                      });
    for (Index t = 0; t < keep_amps; ++t) out.states(order[static_cast<std::size_t>(t)], j) =
        col(order[static_cast<std::size_t>(t)]);
    const double norm = out.states.col(j).norm();
    if (norm <= 0.0) throw InternalError("truncation produced a zero state");
    out.states.col(j) /= norm;
  }
  return out;
}

} // namespace spinchain
