#pragma once

#include <numbers>

// CODATA 2018 values, SI units.
namespace spinsim::constants {

inline constexpr double kPlanck = 6.62607015e-34;             // J s (exact)
inline constexpr double kBohrMagneton = 9.2740100783e-24;     // J/T
inline constexpr double kNuclearMagneton = 5.0507837461e-27;  // J/T
inline constexpr double kVacuumPermeability = 1.25663706212e-6;  // N/A^2
inline constexpr double kMu0Over4Pi = kVacuumPermeability / (4.0 * std::numbers::pi);

inline constexpr double kAngstrom = 1.0e-10;  // m
inline constexpr double kGaussToTesla = 1.0e-4;

// mu_B / h expressed in MHz per gauss (about 1.3996 MHz/G).
inline constexpr double kBohrMagnetonMHzPerGauss = kBohrMagneton / kPlanck * kGaussToTesla * 1.0e-6;

// Rates are handled in MHz (1/us); g2 delays in seconds.
inline constexpr double kSecondsPerMicrosecond = 1.0e-6;

}  // namespace spinsim::constants
