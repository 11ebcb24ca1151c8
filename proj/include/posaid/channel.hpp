// Copyright 2026 The posaid Authors
// SPDX-License-Identifier: Apache-2.0

// Line-of-sight geometry, 3GPP TR 38.901 UMi street-canyon path loss,
// thermal noise and link budget.

#pragma once

#include "posaid/common.hpp"
#include "posaid/rng.hpp"
#include "posaid/scenario.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace posaid {

struct LinkGeometry {
    double d2d = 0.0;
    double d3d = 0.0;
    double azimuth_at_trp = 0.0;  // TRP -> device
    double elevation_at_trp = 0.0;
    double azimuth_at_device = 0.0;  // device -> TRP
    double elevation_at_device = 0.0;
    double trp_height = 0.0;
    double device_height = 0.0;
    bool los = true;
};

struct RadioConfig {
    double carrier_frequency = 28e9;
    double bandwidth = 100e6;
    double subcarrier_spacing = 120e3;
    double tx_power = 0.2;  // W
    double noise_figure = 3.0;
    bool shadowing = true;

    void validate() const
    {
        if (!(carrier_frequency > 0.0) || !(bandwidth > 0.0) || !(subcarrier_spacing > 0.0) ||
            !(tx_power > 0.0) || !(noise_figure >= 0.0))
            throw std::invalid_argument("RadioConfig: all values must be positive");
        if (bandwidth < subcarrier_spacing)
            throw std::invalid_argument("RadioConfig: bandwidth below sub-carrier spacing");
    }

    bool operator==(const RadioConfig&) const = default;
};

/// True iff the segment a-b does not pass through the interior of any building
/// volume (footprint x [0, height)). Touching a wall or corner is not blocking.
inline bool is_los(const WorldGeometry& world, const Vec3& a, const Vec3& b)
{
    const Vec3 d = b - a;
    for (const auto& bld : world.buildings) {
        const double lo[3] = {bld.footprint.x0, bld.footprint.y0,
                              -std::numeric_limits<double>::infinity()};
        const double hi[3] = {bld.footprint.x1, bld.footprint.y1, bld.height};
        double t0 = 0.0, t1 = 1.0;
        bool miss = false;
        for (int k = 0; k < 3 && !miss; ++k) {
            if (std::abs(d[k]) < 1e-15) {
                if (!(a[k] > lo[k] && a[k] < hi[k])) miss = true;
                continue;
            }
            double ta = (lo[k] - a[k]) / d[k];
            double tb = (hi[k] - a[k]) / d[k];
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
            if (!(t0 < t1)) miss = true;
        }
        if (!miss) return false;
    }
    return true;
}

inline LinkGeometry link_geometry(const WorldGeometry& world, const Vec3& trp, const Vec3& device)
{
    LinkGeometry g;
    const Vec3 v = device - trp;
    g.d2d = std::hypot(v.x(), v.y());
    g.d3d = v.norm();
    const Direction fwd = direction_of(v);
    const Direction rev = direction_of(-v);
    g.azimuth_at_trp = fwd.azimuth;
    g.elevation_at_trp = fwd.elevation;
    g.azimuth_at_device = rev.azimuth;
    g.elevation_at_device = rev.elevation;
    g.trp_height = trp.z();
    g.device_height = device.z();
    g.los = is_los(world, trp, device);
    return g;
}

inline double shadowing_sigma_db(bool los) { return los ? 4.0 : 7.82; }

/// Median UMi street-canyon path loss (no shadowing). NLoS applies
/// max(PL_LoS, PL'_NLoS).
inline double umi_path_loss_db(double d2d, double d3d, double fc_hz, double h_bs, double h_ut,
                               bool los)
{
    if (d3d < 1.0) {
        spdlog::warn("umi_path_loss_db: d3d {} m below 1 m, clamped", d3d);
        d3d = 1.0;
    }
    const double fc_ghz = fc_hz / 1e9;
    constexpr double kEnvHeight = 1.0;
    const double d_bp = 4.0 * (h_bs - kEnvHeight) * (h_ut - kEnvHeight) * fc_hz / kSpeedOfLight;
    double pl_los;
    if (d2d <= d_bp) {
        pl_los = 32.4 + 21.0 * std::log10(d3d) + 20.0 * std::log10(fc_ghz);
    } else {
        pl_los = 32.4 + 40.0 * std::log10(d3d) + 20.0 * std::log10(fc_ghz) -
                 9.5 * std::log10(d_bp * d_bp + (h_bs - h_ut) * (h_bs - h_ut));
    }
    if (los) return pl_los;
    const double pl_nlos =
        35.3 * std::log10(d3d) + 22.4 + 21.3 * std::log10(fc_ghz) - 0.3 * (h_ut - 1.5);
    return std::max(pl_los, pl_nlos);
}

/// Path loss in dB for a link. `shadow_normal` is a standard normal deviate
/// scaled by the LoS/NLoS shadowing sigma; pass 0 (or radio.shadowing=false)
/// for the median value.
inline double path_loss_db(const LinkGeometry& g, const RadioConfig& radio, double shadow_normal)
{
    const double pl = umi_path_loss_db(g.d2d, g.d3d, radio.carrier_frequency, g.trp_height,
                                       g.device_height, g.los);
    if (!radio.shadowing) return pl;
    return pl + shadowing_sigma_db(g.los) * shadow_normal;
}

inline double path_loss_db(const LinkGeometry& g, const RadioConfig& radio, Rng& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    return path_loss_db(g, radio, radio.shadowing ? n(rng) : 0.0);
}

inline double noise_power_dbm(double bandwidth_hz, double noise_figure_db)
{
    return -174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
}

inline double noise_power_dbm(const RadioConfig& radio)
{
    return noise_power_dbm(radio.bandwidth, radio.noise_figure);
}

inline double snr_db(double tx_power_w, double gain_tx_dbi, double gain_rx_dbi, double pl_db,
                     double noise_dbm)
{
    return watts_to_dbm(tx_power_w) + gain_tx_dbi + gain_rx_dbi - pl_db - noise_dbm;
}

/// Shadowing deviate of one link during one sweep interval. Stateless, so every
/// strategy evaluated on the same run sees the same value.
inline double link_shadow_normal(std::uint64_t run_seed, int trp_id, std::uint64_t sweep_index)
{
    return hashed_normal(stream_seed(run_seed, 0, "shadowing", static_cast<std::uint64_t>(trp_id),
                                     sweep_index));
}

}  // namespace posaid
