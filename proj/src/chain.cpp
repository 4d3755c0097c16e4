#include "spinchain/chain.hpp"

#include <cmath>
#include <stdexcept>

#include "spinchain/errors.hpp"

namespace spinchain {

std::vector<int> ChainSpec::site_dims() const {
  std::vector<int> dims;
  dims.reserve(sites.size());
  for (const auto& s : sites) dims.push_back(s.local_dim());
  return dims;
}

std::int64_t ChainSpec::hilbert_dim() const {
  std::int64_t dim = 1;
  for (const auto& s : sites) {
    dim *= s.local_dim();
    if (dim < 0 || dim > (std::int64_t{1} << 56)) return -1; // overflow sentinel
  }
  return dim;
}

std::vector<std::string> ChainSpec::validate() const {
  if (sites.empty()) throw std::invalid_argument("chain has no sites");
  if (couplings_mev.size() + 1 != sites.size())
    throw std::invalid_argument("need exactly N-1 couplings for N sites, got " +
                                std::to_string(couplings_mev.size()) + " for " +
                                std::to_string(sites.size()));
  std::vector<std::string> warnings;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const auto& s = sites[i];
    const double two_s = 2.0 * s.spin;
    if (!(s.spin > 0) || std::abs(two_s - std::round(two_s)) > 1e-9)
      throw std::invalid_argument("site " + std::to_string(i) +
                                  ": spin must be a positive integer or half-integer");
    if (!std::isfinite(s.d_mev) || !std::isfinite(s.e_mev) || !std::isfinite(s.g) ||
        !s.tip_field_T.allFinite())
      throw std::invalid_argument("site " + std::to_string(i) + ": non-finite parameter");
    if (s.e_mev < 0)
      warnings.push_back("site " + std::to_string(i) +
                         ": E < 0 (convention is E >= 0; a 90-degree frame rotation "
                         "about z makes it positive)");
  }
  for (std::size_t i = 0; i < couplings_mev.size(); ++i)
    if (!std::isfinite(couplings_mev[i]))
      throw std::invalid_argument("coupling " + std::to_string(i) + ": non-finite value");
  const std::int64_t dim = hilbert_dim();
  if (dim < 0 || dim > dimension_cap)
    throw std::invalid_argument("Hilbert dimension exceeds cap of " +
                                std::to_string(dimension_cap));
  return warnings;
}

ChainSpec uniform_chain(int n_sites, const SiteParams& site, double j_mev) {
  if (n_sites < 1) throw std::invalid_argument("chain needs at least one site");
  ChainSpec chain;
  chain.sites.assign(static_cast<std::size_t>(n_sites), site);
  if (n_sites > 1) chain.couplings_mev.assign(static_cast<std::size_t>(n_sites - 1), j_mev);
  return chain;
}

} // namespace spinchain
