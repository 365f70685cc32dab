#pragma once

#include <numbers>

// Internally every rate is an angular frequency in rad/s and every time is
// in seconds. Anything quoted in cycles (MHz, kHz) is converted here.
namespace robustspin::units {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double mhz(double f) { return kTwoPi * f * 1e6; }
constexpr double khz(double f) { return kTwoPi * f * 1e3; }
constexpr double to_mhz(double omega) { return omega / (kTwoPi * 1e6); }
constexpr double to_khz(double omega) { return omega / (kTwoPi * 1e3); }

constexpr double ns(double t) { return t * 1e-9; }
constexpr double us(double t) { return t * 1e-6; }
constexpr double to_ns(double t) { return t * 1e9; }
constexpr double to_us(double t) { return t * 1e6; }

constexpr double deg(double a) { return a * std::numbers::pi / 180.0; }
constexpr double to_deg(double a) { return a * 180.0 / std::numbers::pi; }

// 13C gyromagnetic ratio, gamma/2pi = 1.0705 kHz/G.
inline constexpr double kGamma13C = kTwoPi * 1.0705e3;

}  // namespace robustspin::units
