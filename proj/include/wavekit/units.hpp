#pragma once

namespace wavekit {

// Natural units (hbar = c = 1, energies in eV) are used everywhere inside the
// library; these constants are only touched at input/output boundaries.
struct UnitSystem {
  static constexpr double hbar_eV_s = 6.582119569e-16;
  static constexpr double hbar_c_eV_m = 1.97326980e-7;
  static constexpr double speed_of_light_m_s = 299792458.0;
  static constexpr double elementary_charge_C = 1.602176634e-19;
  // Rest energy of one gram, m c^2 / e.
  static constexpr double eV_per_gram =
      1.0e-3 * speed_of_light_m_s * speed_of_light_m_s / elementary_charge_C;
  static constexpr double julian_year_s = 365.25 * 86400.0;
};

enum class Unit {
  InverseEV, // time or length in natural units
  Second,
  Meter,
  EV,
  Gram,
};

// Supported pairs: eV^-1 <-> s, eV^-1 <-> m, eV <-> g. Anything else throws
// UnsupportedUnitPair.
double convert(double value, Unit from, Unit to);

inline double seconds_to_years(double s) { return s / UnitSystem::julian_year_s; }

} // namespace wavekit
