#pragma once

#include <random>
#include <vector>

#include "spinchain/chain.hpp"

// Shared test utilities: reproducible random chains for property tests.

namespace test_helpers {

struct RandomChainOptions {
  int max_sites = 3;
  double max_spin = 2.0; // spins drawn from {1/2, 1, ..., max_spin}
  bool allow_y_field = false; // y components make the Hamiltonian complex
  std::int64_t dim_cap = 512;
};

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1p-53);
}

inline spinchain::ChainSpec random_chain(std::mt19937_64& rng, const RandomChainOptions& opt = {}) {
  using namespace spinchain;
  while (true) {
    const int n = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(opt.max_sites));
    ChainSpec chain;
    for (int i = 0; i < n; ++i) {
      SiteParams s;
      const int two_s_max = static_cast<int>(2 * opt.max_spin);
      s.spin = 0.5 * (1 + static_cast<int>(rng() % static_cast<std::uint64_t>(two_s_max)));
      s.d_mev = uniform(rng, -3.0, 1.0);
      s.e_mev = uniform(rng, 0.0, 0.6);
      s.g = uniform(rng, 1.5, 2.6);
      chain.sites.push_back(s);
    }
    for (int i = 0; i + 1 < n; ++i) chain.couplings_mev.push_back(uniform(rng, -1.5, 1.5));
    if (chain.hilbert_dim() <= opt.dim_cap) return chain;
  }
}

inline std::vector<Eigen::Vector3d> random_fields(std::mt19937_64& rng, int n_sites,
                                                  bool allow_y = false) {
  std::vector<Eigen::Vector3d> fields;
  for (int i = 0; i < n_sites; ++i)
    fields.emplace_back(uniform(rng, -8.0, 8.0), allow_y ? uniform(rng, -2.0, 2.0) : 0.0,
                        uniform(rng, -2.0, 2.0));
  return fields;
}

} // namespace test_helpers
