#ifndef TRAPWAVE_CONSTANTS_HPP
#define TRAPWAVE_CONSTANTS_HPP

namespace trapwave::constants {

// SI, CODATA 2018
inline constexpr double epsilon0 = 8.8541878128e-12;        // F/m
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double coulomb = 1.0 / (4.0 * pi * epsilon0);

}  // namespace trapwave::constants

#endif
