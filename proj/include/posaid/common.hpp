// Copyright 2026 The posaid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace posaid {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = std::numbers::pi;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }
inline constexpr double kmph_to_mps(double kmph) { return kmph / 3.6; }

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a)
{
    a = std::remainder(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
}

/// Azimuth / elevation pair in radians. Elevation is measured from the
/// horizontal plane, positive upwards.
struct Direction {
    double azimuth = 0.0;
    double elevation = 0.0;

    bool operator==(const Direction&) const = default;
};

inline Direction direction_of(const Vec3& v)
{
    const double horiz = std::hypot(v.x(), v.y());
    return {wrap_angle(std::atan2(v.y(), v.x())), std::atan2(v.z(), horiz)};
}

inline Vec3 unit_vector(const Direction& d)
{
    const double ce = std::cos(d.elevation);
    return {ce * std::cos(d.azimuth), ce * std::sin(d.azimuth), std::sin(d.elevation)};
}

inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w * 1000.0); }

}  // namespace posaid
