#include "wavekit/units.hpp"

#include "wavekit/error.hpp"

namespace wavekit {

double convert(double value, Unit from, Unit to) {
  if (from == to) {
    return value;
  }
  using U = UnitSystem;
  if (from == Unit::InverseEV && to == Unit::Second) return value * U::hbar_eV_s;
  if (from == Unit::Second && to == Unit::InverseEV) return value / U::hbar_eV_s;
  if (from == Unit::InverseEV && to == Unit::Meter) return value * U::hbar_c_eV_m;
  if (from == Unit::Meter && to == Unit::InverseEV) return value / U::hbar_c_eV_m;
  if (from == Unit::EV && to == Unit::Gram) return value / U::eV_per_gram;
  if (from == Unit::Gram && to == Unit::EV) return value * U::eV_per_gram;
  fail(ErrorCode::UnsupportedUnitPair, "no conversion between the requested units");
}

} // namespace wavekit
