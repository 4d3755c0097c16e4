#pragma once

// Physical constants and unit conventions used throughout the library.
//
// Unit system: energies in meV, magnetic fields in T, temperatures in K,
// bias voltages in mV, currents in pA, conductances in uS, times in s.
// A bias of V millivolts shifts electron energies by V meV (charge e), so
// bias values convert 1:1 into the energy bookkeeping.

namespace spinchain::constants {

// Bohr magneton in meV/T.
inline constexpr double mu_B = 0.0578838;

// Boltzmann constant in meV/K.
inline constexpr double k_B = 0.0861733;

// Elementary charge in C (exact SI value).
inline constexpr double elementary_charge = 1.602176634e-19;

// Converts (conductance [S]) * (energy [meV]) into a scattering rate [1/s]:
// G/e^2 * E = G * E_meV * 1e-3 / e.  See rates module.
inline constexpr double rate_per_siemens_mev = 1e-3 / elementary_charge;

} // namespace spinchain::constants
