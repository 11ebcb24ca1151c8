// Copyright 2026 The posaid Authors
// SPDX-License-Identifier: Apache-2.0

// Uniform planar array patterns and beam codebooks.

#pragma once

#include "posaid/common.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace posaid {

/// Planar array in the local y-z plane; columns along y, rows along z, the
/// boresight is local +x. Element spacing in wavelengths.
struct Upa {
    int n_rows = 8;
    int n_cols = 8;
    double element_spacing = 0.5;

    int elements() const { return n_rows * n_cols; }
    double boresight_gain_dbi() const { return 10.0 * std::log10(static_cast<double>(elements())); }
};

inline constexpr double kGainFloorDb = 40.0;

namespace detail {

/// |AF| / N of a uniform linear array with phase progression psi per element.
inline double normalized_array_factor(int n, double psi)
{
    const double half = 0.5 * psi;
    const double den = std::sin(half);
    if (std::abs(den) < 1e-12) return 1.0;
    return std::abs(std::sin(n * half) / (n * den));
}

}  // namespace detail

/// Array gain toward `direction` for a beam steered at `steering`, both given in
/// the array's local frame. The array radiates into its front half-space only;
/// anything behind it, and any lobe deeper than 40 dB below boresight, sits at
/// the floor.
inline double array_gain_dbi(const Upa& upa, const Direction& steering, const Direction& direction)
{
    const double peak = upa.boresight_gain_dbi();
    const double floor = peak - kGainFloorDb;
    const Vec3 u = unit_vector(direction);
    if (u.x() <= 0.0) return floor;
    const Vec3 s = unit_vector(steering);
    const double k = 2.0 * kPi * upa.element_spacing;
    const double af_cols = detail::normalized_array_factor(upa.n_cols, k * (u.y() - s.y()));
    const double af_rows = detail::normalized_array_factor(upa.n_rows, k * (u.z() - s.z()));
    const double prod = af_cols * af_rows;
    if (prod <= 0.0) return floor;
    return std::max(peak + 20.0 * std::log10(prod), floor);
}

enum class BeamOwner { trp, device };

struct Sector {
    double az_min = -kPi / 3.0;
    double az_max = kPi / 3.0;
    std::vector<double> elevations{deg_to_rad(-10.0), 0.0};
};

/// Electronic: one panel facing local azimuth 0 steers every beam.
/// Panel-per-beam: beam k is radiated by a panel facing the beam's azimuth
/// (the device carries a ring of panels around its body).
enum class SteeringMode { electronic, panel_per_beam };

struct BeamCodebook {
    std::vector<Direction> beams;  // steering directions in the owner's frame
    BeamOwner owner = BeamOwner::trp;
    SteeringMode mode = SteeringMode::electronic;
    Upa upa;

    std::size_t size() const { return beams.size(); }

    /// Gain of beam `index` toward `direction` (owner's local frame).
    double gain_dbi(std::size_t index, const Direction& direction) const
    {
        const Direction& b = beams.at(index);
        if (mode == SteeringMode::electronic) return array_gain_dbi(upa, b, direction);
        const Direction panel_dir{wrap_angle(direction.azimuth - b.azimuth), direction.elevation};
        return array_gain_dbi(upa, {0.0, b.elevation}, panel_dir);
    }
};

/// Beams on an (elevation x azimuth) grid ordered by elevation, then azimuth.
/// A full-circle sector places azimuths at az_min + k*360/n; a partial sector
/// places them at the centers of n equal cells.
inline BeamCodebook make_codebook(const Upa& upa, BeamOwner owner, int n_beams, const Sector& sector)
{
    if (n_beams < 1) throw std::invalid_argument("make_codebook: n_beams must be >= 1");
    if (upa.n_rows < 1 || upa.n_cols < 1)
        throw std::invalid_argument("make_codebook: array needs at least one row and column");
    if (sector.elevations.empty() || !(sector.az_max > sector.az_min))
        throw std::invalid_argument("make_codebook: empty sector");
    const int n_el = static_cast<int>(sector.elevations.size());
    if (n_beams % n_el != 0)
        throw std::invalid_argument("make_codebook: n_beams not divisible by elevation steps");
    const int n_az = n_beams / n_el;
    const double span = sector.az_max - sector.az_min;
    const bool full_circle = span >= 2.0 * kPi - 1e-9;

    BeamCodebook cb;
    cb.owner = owner;
    cb.upa = upa;
    cb.mode = owner == BeamOwner::device ? SteeringMode::panel_per_beam : SteeringMode::electronic;
    for (double el : sector.elevations) {
        for (int k = 0; k < n_az; ++k) {
            const double az = full_circle ? sector.az_min + k * span / n_az
                                          : sector.az_min + (k + 0.5) * span / n_az;
            cb.beams.push_back({wrap_angle(az), el});
        }
    }
    return cb;
}

/// 8x8 array, 8 azimuths over a 120 degree sector x elevations {-10, 0} degrees.
inline BeamCodebook default_trp_codebook()
{
    return make_codebook({8, 8, 0.5}, BeamOwner::trp, 16, Sector{});
}

inline constexpr double kDeviceElevationTilt = 10.0 * kPi / 180.0;

/// 4x4 panels, 8 azimuths over the full circle relative to the heading, tilted
/// up toward the TRPs.
inline BeamCodebook default_device_codebook()
{
    return make_codebook({4, 4, 0.5}, BeamOwner::device, 8,
                         Sector{0.0, 2.0 * kPi, {kDeviceElevationTilt}});
}

/// Index of the largest value; values within 1e-9 of the running best count as
/// ties and keep the lower index.
inline std::size_t argmax_lowest(std::span<const double> values)
{
    if (values.empty()) throw std::invalid_argument("argmax_lowest: empty input");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best] + 1e-9) best = i;
    return best;
}

/// Index maximising the gain toward `direction`; ties go to the lowest index.
inline std::size_t best_beam_geometric(const BeamCodebook& cb, const Direction& direction)
{
    if (cb.beams.empty()) throw std::invalid_argument("best_beam_geometric: empty codebook");
    std::vector<double> gains(cb.size());
    for (std::size_t i = 0; i < cb.size(); ++i) gains[i] = cb.gain_dbi(i, direction);
    return argmax_lowest(gains);
}

inline nlohmann::json to_json(const BeamCodebook& cb)
{
    nlohmann::json j;
    j["owner"] = cb.owner == BeamOwner::trp ? "trp" : "device";
    j["mode"] = cb.mode == SteeringMode::electronic ? "electronic" : "panel_per_beam";
    j["upa"] = {{"rows", cb.upa.n_rows}, {"cols", cb.upa.n_cols}, {"spacing", cb.upa.element_spacing}};
    for (std::size_t i = 0; i < cb.size(); ++i)
        j["beams"].push_back({{"index", i},
                              {"azimuth_deg", rad_to_deg(cb.beams[i].azimuth)},
                              {"elevation_deg", rad_to_deg(cb.beams[i].elevation)}});
    return j;
}

}  // namespace posaid
