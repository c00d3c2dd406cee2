#pragma once

#include <numbers>

// CODATA 2018 values in SI units. Exact where the SI definition makes them so.
namespace resokit::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double speed_of_light = 299792458.0;      // m/s
inline constexpr double mu0 = 1.25663706212e-6;            // H/m
inline constexpr double eps0 = 8.8541878128e-12;           // F/m
inline constexpr double planck = 6.62607015e-34;           // J s
inline constexpr double boltzmann = 1.380649e-23;          // J/K

inline constexpr double eps_silicon = 11.45;

} // namespace resokit::constants
