#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace g4v {

/// Physical constants, CODATA-2018, frozen here so golden tests are bit-stable.
namespace constants {
// Planck constant in eV*s (exact in SI 2019 redefinition)
inline constexpr double planck_ev_s = 4.135667696e-15;
// 1 meV in GHz: (1e-3 eV) / h
inline constexpr double mev_to_ghz = 241.798935;
// Bohr magneton over h, GHz per tesla
inline constexpr double mu_b_ghz_per_tesla = 13.996245;
// speed of light, cm/s
inline constexpr double c_cm_per_s = 2.99792458e10;
// 1 meV in cm^-1: 1e-3 / (h*c)
inline constexpr double mev_to_inv_cm = 1e-3 / (planck_ev_s * c_cm_per_s);
// SI values for the quadrupole coupling formula
inline constexpr double elementary_charge_c = 1.602176634e-19;
inline constexpr double planck_j_s = 6.62607015e-34;
inline constexpr double tesla_per_gauss = 1e-4;
}  // namespace constants

enum class EnergyUnit { meV, GHz, MHz, inv_cm };
enum class FieldUnit { tesla, gauss };

inline const char* unit_name(EnergyUnit u) {
  switch (u) {
    case EnergyUnit::meV: return "meV";
    case EnergyUnit::GHz: return "GHz";
    case EnergyUnit::MHz: return "MHz";
    case EnergyUnit::inv_cm: return "cm^-1";
  }
  return "?";
}

/// Energy value tagged with its unit. Conversions go through fixed ratios,
/// so same-unit conversion is exactly the identity.
struct Energy {
  double value = 0.0;
  EnergyUnit unit = EnergyUnit::meV;

  static Energy mev(double v) { return {v, EnergyUnit::meV}; }
  static Energy ghz(double v) { return {v, EnergyUnit::GHz}; }
  static Energy mhz(double v) { return {v, EnergyUnit::MHz}; }
};

namespace detail {
// scale factor from `u` to GHz
inline double to_ghz_factor(EnergyUnit u) {
  switch (u) {
    case EnergyUnit::meV: return constants::mev_to_ghz;
    case EnergyUnit::GHz: return 1.0;
    case EnergyUnit::MHz: return 1e-3;
    case EnergyUnit::inv_cm: return constants::mev_to_ghz / constants::mev_to_inv_cm;
  }
  return 1.0;
}
}  // namespace detail

inline Energy convert_energy(Energy e, EnergyUnit target) {
  if (e.unit == target) return e;
  double v = e.value * detail::to_ghz_factor(e.unit) / detail::to_ghz_factor(target);
  return {v, target};
}

inline double as_ghz(Energy e) { return convert_energy(e, EnergyUnit::GHz).value; }
inline double as_mev(Energy e) { return convert_energy(e, EnergyUnit::meV).value; }
inline double as_mhz(Energy e) { return convert_energy(e, EnergyUnit::MHz).value; }

struct MagneticField {
  double value = 0.0;
  FieldUnit unit = FieldUnit::tesla;

  static MagneticField tesla(double v) { return {v, FieldUnit::tesla}; }
  static MagneticField gauss(double v) { return {v, FieldUnit::gauss}; }

  double in_tesla() const {
    return unit == FieldUnit::tesla ? value : value * constants::tesla_per_gauss;
  }
  double in_gauss() const {
    return unit == FieldUnit::gauss ? value : value / constants::tesla_per_gauss;
  }
};

/// g * mu_B * B, returned in GHz. B must be non-negative.
inline Energy zeeman_splitting(double g, MagneticField b) {
  double bt = b.in_tesla();
  if (bt < 0.0) throw std::invalid_argument("zeeman_splitting: negative field");
  return Energy::ghz(g * constants::mu_b_ghz_per_tesla * bt);
}

}  // namespace g4v
