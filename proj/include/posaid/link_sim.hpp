// Copyright 2026 The posaid Authors
// SPDX-License-Identifier: Apache-2.0

// Phase 2 time loop: applies one strategy to one trajectory at TTI granularity.

#pragma once

#include "posaid/beam_mgmt.hpp"
#include "posaid/channel.hpp"
#include "posaid/positioning.hpp"
#include "posaid/scenario.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace posaid {

/// (1 - overhead) * B * log2(1 + snr), optionally capped at `se_cap` bit/s/Hz
/// (se_cap <= 0 disables the cap).
inline double shannon_rate(double snr_db, double bandwidth, double overhead_fraction,
                           double se_cap = 0.0)
{
    if (!(overhead_fraction >= 0.0 && overhead_fraction < 1.0))
        throw std::invalid_argument("shannon_rate: overhead fraction must be in [0, 1)");
    if (!std::isfinite(snr_db)) return 0.0;
    double se = std::log2(1.0 + from_db(snr_db));
    if (se_cap > 0.0) se = std::min(se, se_cap);
    return (1.0 - overhead_fraction) * bandwidth * se;
}

struct LinkRecord {
    double t = 0.0;
    Strategy strategy = Strategy::baseline;
    int trp_id = -1;
    std::size_t trp_beam = 0;
    std::size_t device_beam = 0;
    double snr_db = -std::numeric_limits<double>::infinity();
    double rate_bps = 0.0;
    bool los = false;

    bool operator==(const LinkRecord&) const = default;
};

/// Where the proposed strategy takes the device orientation from.
enum class HeadingSource { estimated_velocity, known_orientation };

struct RunConfig {
    Strategy strategy = Strategy::baseline;
    HeadingSource heading_source = HeadingSource::estimated_velocity;
    double heading_smoothing = 0.25;  // s, low-pass time constant on the estimated velocity
    double heading_confidence = 5.0;  // speed must exceed this many velocity std devs
    SweepSchedule schedule;
    double tti = 0.010;
    double beacon_interval = 0.010;
    int stale_intervals = 3;
    double discovery_radius = 100.0;
    double se_cap = 7.8;
    RadioConfig radio;
    std::uint64_t seed = 1;

    void validate() const
    {
        schedule.validate();
        radio.validate();
        if (!(tti > 0.0) || tti > beacon_interval + 1e-12)
            throw std::invalid_argument("RunConfig: tti must be positive and <= beacon interval");
        if (!(discovery_radius > 0.0))
            throw std::invalid_argument("RunConfig: discovery radius must be positive");
    }
};

/// Walks the trajectory one TTI at a time. Sweeps happen every schedule.period
/// and set the association for every strategy; their airtime is charged through
/// the overhead fraction on every TTI rather than simulated per subframe.
inline std::vector<LinkRecord> simulate_run(const RunConfig& cfg, const WorldGeometry& world,
                                            std::span<const TrpSite> trps, const Codebooks& books,
                                            const Trajectory& trajectory,
                                            std::span<const PositionEstimate> estimates)
{
    cfg.validate();
    if (needs_estimates(cfg.strategy) && estimates.empty())
        throw std::invalid_argument(std::string("simulate_run: strategy ") +
                                    std::string(to_string(cfg.strategy)) +
                                    " needs a position estimate stream");
    if (trajectory.size() < 2) throw std::invalid_argument("simulate_run: trajectory too short");

    const double traj_dt = trajectory[1].t - trajectory[0].t;
    const auto step = std::max<std::size_t>(1, std::llround(cfg.tti / traj_dt));
    const auto sweep_every = std::max<std::int64_t>(1, std::llround(cfg.schedule.period / cfg.tti));
    const auto refresh_every = std::max<std::int64_t>(1, std::llround(cfg.beacon_interval / cfg.tti));
    const double overhead = sweep_overhead_fraction(cfg.schedule);
    const double stale_limit = cfg.stale_intervals * cfg.beacon_interval + 1e-9;

    LinkBudget budget(world, trps, books, cfg.radio, cfg.seed);
    std::vector<LinkRecord> out;
    out.reserve(trajectory.size() / step + 1);

    BeamAssignment current;
    std::size_t sweep_device_beam = 0;
    std::uint64_t sweep_index = 0;
    std::optional<Vec3> last_heading;
    std::optional<Vec3> smoothed_velocity;
    double smoothed_at = 0.0;
    std::size_t est_cursor = 0;
    bool stale_logged = false;

    std::int64_t k = 0;
    for (std::size_t i = 0; i < trajectory.size(); i += step, ++k) {
        const auto& smp = trajectory[i];
        const double t = smp.t;

        if (k % sweep_every == 0) {
            sweep_index = static_cast<std::uint64_t>(k / sweep_every);
            const auto sw = exhaustive_sweep(smp.position, smp.heading, budget, cfg.discovery_radius,
                                             sweep_index, t);
            current = sw.assignment;
            current.strategy = cfg.strategy;
            sweep_device_beam = current.device_beam;
        } else if (!current.outage()) {
            const TrpSite& serving = budget.trp(current.trp_id);
            switch (cfg.strategy) {
                case Strategy::baseline: break;
                case Strategy::hypothetical:
                    current = hypothetical_assignment(smp.position, smp.heading, serving, books, t);
                    break;
                case Strategy::proposed:
                case Strategy::reference: {
                    if (k % refresh_every != 0) break;
                    while (est_cursor + 1 < estimates.size() && estimates[est_cursor + 1].t <= t + 1e-9)
                        ++est_cursor;
                    const auto& est = estimates[est_cursor];
                    if (est.t > t + 1e-9 || t - est.t > stale_limit) {
                        if (!stale_logged)
                            spdlog::debug("simulate_run: no fresh estimate at t={}, keeping beams", t);
                        stale_logged = true;
                        break;
                    }
                    if (cfg.strategy == Strategy::proposed) {
                        if (cfg.heading_source == HeadingSource::known_orientation) {
                            last_heading = smp.heading;
                        } else {
                            const double a = smoothed_velocity && cfg.heading_smoothing > 0.0
                                                 ? 1.0 - std::exp(-(est.t - smoothed_at) /
                                                                  cfg.heading_smoothing)
                                                 : 1.0;
                            smoothed_velocity = smoothed_velocity
                                                    ? Vec3(*smoothed_velocity +
                                                           a * (est.velocity - *smoothed_velocity))
                                                    : est.velocity;
                            smoothed_at = est.t;
                            last_heading = heading_from_velocity(*smoothed_velocity, est.v_var,
                                                                 cfg.heading_confidence);
                        }
                        current = position_aided_assignment(est.position, serving, books, last_heading,
                                                            current.device_beam, t);
                    } else {
                        current = reference_assignment(est.position, serving, books,
                                                       sweep_device_beam, t);
                    }
                    break;
                }
            }
        }

        LinkRecord rec;
        rec.t = t;
        rec.strategy = cfg.strategy;
        rec.trp_id = current.trp_id;
        rec.trp_beam = current.trp_beam;
        rec.device_beam = current.device_beam;
        if (!current.outage()) {
            const auto e = budget.snr(budget.trp(current.trp_id), current.trp_beam,
                                      current.device_beam, smp.position, smp.heading, sweep_index);
            rec.snr_db = e.snr_db;
            rec.los = e.los;
            rec.rate_bps = shannon_rate(e.snr_db, cfg.radio.bandwidth, overhead, cfg.se_cap);
        }
        out.push_back(rec);
    }
    return out;
}

}  // namespace posaid
