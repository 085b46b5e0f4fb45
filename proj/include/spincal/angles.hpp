#pragma once

#include <cmath>

namespace spincal {

inline constexpr double kPi = 3.14159265358979323846;

/// Reduce an angle to the half-open interval (-pi, pi].
inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    if (a > kPi) a -= 2.0 * kPi;
    return a;
}

/// Shortest signed angular difference b - a, in (-pi, pi].
inline double angle_diff(double b, double a) { return wrap_angle(b - a); }

inline double deg_to_rad(double d) { return d * kPi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / kPi; }

}  // namespace spincal
