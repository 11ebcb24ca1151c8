// Copyright 2026 The posaid Authors
// SPDX-License-Identifier: Apache-2.0

// Beam / TRP selection strategies and sweep overhead accounting.
//
// Association (which TRP serves the device) only changes at sweep instants, for
// every strategy. Between sweeps the strategies differ in how they refresh the
// beam pair:
//   baseline      beams locked to the last sweep
//   proposed      both ends re-pointed from the position estimate
//   reference     TRP end re-pointed from the estimate, device end locked
//   hypothetical  both ends re-pointed from the true position every TTI

#pragma once

#include "posaid/antenna.hpp"
#include "posaid/channel.hpp"
#include "posaid/common.hpp"
#include "posaid/scenario.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace posaid {

enum class Strategy { baseline, proposed, reference, hypothetical };

inline std::string_view to_string(Strategy s)
{
    switch (s) {
        case Strategy::baseline: return "baseline";
        case Strategy::proposed: return "proposed";
        case Strategy::reference: return "reference";
        case Strategy::hypothetical: return "hypothetical";
    }
    return "?";
}

inline Strategy parse_strategy(std::string_view s)
{
    if (s == "baseline") return Strategy::baseline;
    if (s == "proposed") return Strategy::proposed;
    if (s == "reference") return Strategy::reference;
    if (s == "hypothetical") return Strategy::hypothetical;
    throw std::invalid_argument("unknown strategy '" + std::string(s) + "'");
}

inline bool needs_estimates(Strategy s)
{
    return s == Strategy::proposed || s == Strategy::reference;
}

struct BeamAssignment {
    int trp_id = -1;  // -1: outage
    std::size_t trp_beam = 0;
    std::size_t device_beam = 0;
    double assigned_at = 0.0;
    Strategy strategy = Strategy::baseline;

    bool outage() const { return trp_id < 0; }
    bool operator==(const BeamAssignment&) const = default;
};

struct SweepSchedule {
    double period = 1.0;
    double subframe = 0.125e-3;
    int combos = 128;

    double duration() const { return combos * subframe; }

    void validate() const
    {
        if (combos < 1 || !(subframe > 0.0))
            throw std::invalid_argument("SweepSchedule: combos and subframe must be positive");
        if (!(period > duration()))
            throw std::invalid_argument("SweepSchedule: period must exceed the sweep duration");
    }
};

inline double sweep_overhead_fraction(const SweepSchedule& s)
{
    s.validate();
    return (s.combos * s.subframe) / s.period;
}

struct Codebooks {
    BeamCodebook trp = default_trp_codebook();
    BeamCodebook device = default_device_codebook();

    int combos() const { return static_cast<int>(trp.size() * device.size()); }
};

/// Direction of `device_pos` in the TRP array frame.
inline Direction trp_local_direction(const TrpSite& trp, const Vec3& device_pos)
{
    Direction d = direction_of(device_pos - trp.position);
    d.azimuth = wrap_angle(d.azimuth - trp.boresight_azimuth);
    return d;
}

/// Direction of the TRP in the device body frame (azimuth relative to heading).
inline Direction device_local_direction(const Vec3& device_pos, const Vec3& heading,
                                        const Vec3& trp_pos)
{
    Direction d = direction_of(trp_pos - device_pos);
    d.azimuth = wrap_angle(d.azimuth - std::atan2(heading.y(), heading.x()));
    return d;
}

/// Evaluates downlink SNR of (TRP, beam pair) links on true geometry. The
/// shadowing value of a link is fixed for one sweep interval.
class LinkBudget {
public:
    LinkBudget(const WorldGeometry& world, std::span<const TrpSite> trps, const Codebooks& books,
               const RadioConfig& radio, std::uint64_t run_seed)
        : world_(world), trps_(trps), books_(books), radio_(radio), run_seed_(run_seed),
          noise_dbm_(noise_power_dbm(radio))
    {
    }

    const WorldGeometry& world() const { return world_; }
    std::span<const TrpSite> trps() const { return trps_; }
    const Codebooks& codebooks() const { return books_; }
    const RadioConfig& radio() const { return radio_; }

    const TrpSite& trp(int id) const
    {
        for (const auto& t : trps_)
            if (t.id == id) return t;
        throw std::invalid_argument("LinkBudget: unknown TRP id " + std::to_string(id));
    }

    struct Eval {
        double snr_db = -std::numeric_limits<double>::infinity();
        bool los = false;
    };

    /// Beam-independent part: tx power - path loss - noise, plus LoS flag.
    Eval budget_db(const TrpSite& trp, const Vec3& device_pos, std::uint64_t sweep_index) const
    {
        const auto g = link_geometry(world_, trp.position, device_pos);
        const double pl = path_loss_db(g, radio_, link_shadow_normal(run_seed_, trp.id, sweep_index));
        return {snr_db(radio_.tx_power, 0.0, 0.0, pl, noise_dbm_), g.los};
    }

    Eval snr(const TrpSite& trp, std::size_t trp_beam, std::size_t device_beam,
             const Vec3& device_pos, const Vec3& heading, std::uint64_t sweep_index) const
    {
        Eval e = budget_db(trp, device_pos, sweep_index);
        e.snr_db += books_.trp.gain_dbi(trp_beam, trp_local_direction(trp, device_pos));
        e.snr_db += books_.device.gain_dbi(device_beam,
                                           device_local_direction(device_pos, heading, trp.position));
        return e;
    }

private:
    const WorldGeometry& world_;
    std::span<const TrpSite> trps_;
    const Codebooks& books_;
    RadioConfig radio_;
    std::uint64_t run_seed_;
    double noise_dbm_;
};

struct SweepResult {
    BeamAssignment assignment;
    double snr_db = -std::numeric_limits<double>::infinity();
};

/// Tries every (TRP, TRP beam, device beam) triple for TRPs within
/// `discovery_radius` and keeps the best SNR; ties go to the lowest
/// (trp_id, trp_beam, device_beam). No TRP in range yields an outage.
inline SweepResult exhaustive_sweep(const Vec3& device_pos, const Vec3& heading,
                                    const LinkBudget& budget, double discovery_radius,
                                    std::uint64_t sweep_index, double t)
{
    SweepResult best;
    best.assignment.assigned_at = t;
    const auto& books = budget.codebooks();
    std::vector<double> gt(books.trp.size()), gd(books.device.size());
    for (const auto& trp : budget.trps()) {
        if ((trp.position - device_pos).norm() > discovery_radius) continue;
        const auto base = budget.budget_db(trp, device_pos, sweep_index);
        const Direction at_trp = trp_local_direction(trp, device_pos);
        const Direction at_dev = device_local_direction(device_pos, heading, trp.position);
        for (std::size_t i = 0; i < gt.size(); ++i) gt[i] = books.trp.gain_dbi(i, at_trp);
        for (std::size_t j = 0; j < gd.size(); ++j) gd[j] = books.device.gain_dbi(j, at_dev);
        for (std::size_t i = 0; i < gt.size(); ++i) {
            for (std::size_t j = 0; j < gd.size(); ++j) {
                const double s = base.snr_db + gt[i] + gd[j];
                const bool better =
                    best.assignment.outage() || s > best.snr_db + 1e-9 ||
                    (std::abs(s - best.snr_db) <= 1e-9 && trp.id < best.assignment.trp_id);
                if (better) {
                    best.snr_db = s;
                    best.assignment.trp_id = trp.id;
                    best.assignment.trp_beam = i;
                    best.assignment.device_beam = j;
                }
            }
        }
    }
    return best;
}

/// Beam pair pointed at an estimated device position. Without a usable heading
/// the device keeps `fallback_device_beam`.
inline BeamAssignment position_aided_assignment(const Vec3& estimate, const TrpSite& serving,
                                                const Codebooks& books,
                                                std::optional<Vec3> heading_estimate,
                                                std::size_t fallback_device_beam, double t)
{
    BeamAssignment a;
    a.trp_id = serving.id;
    a.assigned_at = t;
    a.strategy = Strategy::proposed;
    a.trp_beam = best_beam_geometric(books.trp, trp_local_direction(serving, estimate));
    a.device_beam =
        heading_estimate
            ? best_beam_geometric(books.device,
                                  device_local_direction(estimate, *heading_estimate, serving.position))
            : fallback_device_beam;
    return a;
}

inline BeamAssignment hypothetical_assignment(const Vec3& true_pos, const Vec3& true_heading,
                                              const TrpSite& serving, const Codebooks& books,
                                              double t)
{
    BeamAssignment a = position_aided_assignment(true_pos, serving, books, true_heading, 0, t);
    a.strategy = Strategy::hypothetical;
    return a;
}

inline BeamAssignment reference_assignment(const Vec3& estimate, const TrpSite& serving,
                                           const Codebooks& books, std::size_t locked_device_beam,
                                           double t)
{
    BeamAssignment a;
    a.trp_id = serving.id;
    a.assigned_at = t;
    a.strategy = Strategy::reference;
    a.trp_beam = best_beam_geometric(books.trp, trp_local_direction(serving, estimate));
    a.device_beam = locked_device_beam;
    return a;
}

/// Unit heading from an estimated velocity, if the device is clearly moving:
/// the horizontal speed must exceed `min_speed` and `confidence` standard
/// deviations of the velocity estimate (`velocity_var` is the horizontal trace).
inline std::optional<Vec3> heading_from_velocity(const Vec3& v, double velocity_var = 0.0,
                                                 double confidence = 5.0, double min_speed = 0.2)
{
    const Vec3 h{v.x(), v.y(), 0.0};
    const double n = h.norm();
    if (n < min_speed || n < confidence * std::sqrt(std::max(velocity_var, 0.0)))
        return std::nullopt;
    return h / n;
}

}  // namespace posaid
