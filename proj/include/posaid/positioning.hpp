// Copyright 2026 The posaid Authors
// SPDX-License-Identifier: Apache-2.0

// Network-side tracking of a device from DoA (and optionally ToA) pilot
// measurements at the closest LoS TRPs, with an EKF that carries the device
// clock and the constant TRP clock offsets.
//
// Clock quantities are carried inside the filter in range-equivalent meters
// (c * seconds) so that the covariance stays well scaled; the accessors on
// EkfState convert back to seconds.

#pragma once

#include "posaid/channel.hpp"
#include "posaid/common.hpp"
#include "posaid/rng.hpp"
#include "posaid/scenario.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace posaid {

enum class PositioningMode { doa_only, doa_toa };

inline std::string_view to_string(PositioningMode m)
{
    return m == PositioningMode::doa_only ? "doa_only" : "doa_toa";
}

inline PositioningMode parse_positioning_mode(std::string_view s)
{
    if (s == "doa_only") return PositioningMode::doa_only;
    if (s == "doa_toa") return PositioningMode::doa_toa;
    throw std::invalid_argument("unknown positioning mode '" + std::string(s) + "'");
}

struct PilotConfig {
    double interval = 0.010;
    int n_pilot_subcarriers = 40;
    double pilot_scs = 15e3;
    double effective_bandwidth = 3e6;
    double carrier_frequency = 3.5e9;
    double tx_power = 0.2;
    double noise_figure = 3.0;

    /// Ratio between the effective bandwidth and the bandwidth physically
    /// occupied by the pilot sub-carriers (comb spreading).
    double spreading_factor() const
    {
        return effective_bandwidth / (n_pilot_subcarriers * pilot_scs);
    }

    void validate() const
    {
        if (!(interval > 0.0)) throw std::invalid_argument("PilotConfig: interval must be positive");
        if (n_pilot_subcarriers < 1 || !(pilot_scs > 0.0) || !(effective_bandwidth > 0.0))
            throw std::invalid_argument("PilotConfig: sub-carrier layout must be positive");
        if (spreading_factor() < 1.0)
            throw std::invalid_argument("PilotConfig: effective bandwidth below occupied bandwidth");
    }

    bool operator==(const PilotConfig&) const = default;
};

struct MeasurementNoise {
    double azimuth_std = deg_to_rad(2.0);
    double elevation_std = deg_to_rad(2.0);
    double range_std_at_0db = 3.0;  // m
    double range_std_floor = 0.3;   // m
    bool enabled = true;

    /// ToA standard deviation (s) for a pilot received at `snr_db`.
    double toa_std(double snr_db) const
    {
        const double range = range_std_at_0db / std::sqrt(from_db(snr_db));
        return std::max(range, range_std_floor) / kSpeedOfLight;
    }

    bool operator==(const MeasurementNoise&) const = default;
};

struct Measurement {
    double t = 0.0;
    int trp_id = 0;
    double azimuth = 0.0;
    double elevation = 0.0;
    std::optional<double> toa;
    double snr_db = 0.0;
};

/// Device clock: offset rho (s) and drift alpha (s/s).
struct DeviceClock {
    double offset = 0.0;
    double drift = 0.0;
};

struct ClockModel {
    double device_offset_max = 10e-6;  // initial rho ~ U(-max, max)
    double drift_init_std = 1e-8;      // initial alpha ~ N(0, std^2)
    double drift_walk_std = 1e-9;      // alpha random walk, s/s per sqrt(s)

    bool operator==(const ClockModel&) const = default;
};

/// Median pilot-link SNR with omnidirectional antennas.
inline double pilot_snr_db(const LinkGeometry& geom, const PilotConfig& pilot)
{
    const double pl = umi_path_loss_db(geom.d2d, geom.d3d, pilot.carrier_frequency,
                                       geom.trp_height, geom.device_height, geom.los);
    return snr_db(pilot.tx_power, 0.0, 0.0, pl,
                  noise_power_dbm(pilot.effective_bandwidth, pilot.noise_figure));
}

inline Measurement generate_measurement(const LinkGeometry& geom, const TrpSite& trp,
                                        const DeviceClock& clock, double t,
                                        const MeasurementNoise& noise, const PilotConfig& pilot,
                                        bool with_toa, Rng& rng)
{
    if (!geom.los) throw std::invalid_argument("generate_measurement: link is not LoS");
    std::normal_distribution<double> n01(0.0, 1.0);
    Measurement m;
    m.t = t;
    m.trp_id = trp.id;
    m.snr_db = pilot_snr_db(geom, pilot);
    const double k = noise.enabled ? 1.0 : 0.0;
    m.azimuth = wrap_angle(geom.azimuth_at_trp + k * noise.azimuth_std * n01(rng));
    m.elevation = std::clamp(geom.elevation_at_trp + k * noise.elevation_std * n01(rng),
                             -kPi / 2.0, kPi / 2.0);
    if (with_toa)
        m.toa = geom.d3d / kSpeedOfLight + clock.offset + trp.clock_offset +
                k * noise.toa_std(m.snr_db) * n01(rng);
    return m;
}

// ---------------------------------------------------------------------------
// EKF

namespace state_index {
inline constexpr int kPos = 0;
inline constexpr int kVel = 3;
inline constexpr int kClockOffset = 6;
inline constexpr int kClockDrift = 7;
inline constexpr int kBase = 8;
}  // namespace state_index

struct EkfState {
    double t = 0.0;
    VecX x = VecX::Zero(state_index::kBase);
    MatX P = MatX::Identity(state_index::kBase, state_index::kBase);
    std::vector<int> trp_ids;  // order of the appended TRP offset states

    std::size_t dim() const { return static_cast<std::size_t>(x.size()); }
    Vec3 position() const { return x.segment<3>(state_index::kPos); }
    Vec3 velocity() const { return x.segment<3>(state_index::kVel); }
    Eigen::Matrix3d position_covariance() const { return P.block<3, 3>(0, 0); }
    Eigen::Matrix3d velocity_covariance() const
    {
        return P.block<3, 3>(state_index::kVel, state_index::kVel);
    }
    double device_clock_offset() const { return x[state_index::kClockOffset] / kSpeedOfLight; }
    double device_clock_drift() const { return x[state_index::kClockDrift] / kSpeedOfLight; }

    std::optional<int> offset_index(int trp_id) const
    {
        for (std::size_t i = 0; i < trp_ids.size(); ++i)
            if (trp_ids[i] == trp_id) return state_index::kBase + static_cast<int>(i);
        return std::nullopt;
    }

    std::optional<double> trp_clock_offset(int trp_id) const
    {
        if (auto i = offset_index(trp_id)) return x[*i] / kSpeedOfLight;
        return std::nullopt;
    }

    /// Appends a TRP offset state (range units) with the given prior variance.
    void add_trp_offset(int trp_id, double variance_m2)
    {
        const auto n = x.size();
        x.conservativeResize(n + 1);
        x[n] = 0.0;
        P.conservativeResize(n + 1, n + 1);
        P.row(n).setZero();
        P.col(n).setZero();
        P(n, n) = variance_m2;
        trp_ids.push_back(trp_id);
    }
};

struct ProcessNoise {
    double accel_std = 0.5;        // white acceleration, m/s^2 /sqrt(Hz)
    double drift_walk_std = 1e-9;  // s/s per sqrt(s)

    bool operator==(const ProcessNoise&) const = default;
};

inline double default_accel_std(DeviceKind k) { return k == DeviceKind::vehicle ? 1.5 : 0.5; }

class EkfError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline bool is_positive_definite(const MatX& P)
{
    Eigen::LLT<MatX> llt(P);
    return llt.info() == Eigen::Success;
}

/// Constant-velocity prediction. TRP offsets are constants.
inline EkfState ekf_predict(const EkfState& s, double dt, const ProcessNoise& q)
{
    using namespace state_index;
    if (!(dt > 0.0)) throw std::invalid_argument("ekf_predict: dt must be positive");
    EkfState out = s;
    out.t = s.t + dt;
    out.x.segment<3>(kPos) += dt * s.x.segment<3>(kVel);
    out.x[kClockOffset] += dt * s.x[kClockDrift];

    // F P F^T with F = I + dt * (pos <- vel, offset <- drift), as row then
    // column operations.
    MatX& P = out.P;
    P.middleRows<3>(kPos) += dt * P.middleRows<3>(kVel);
    P.row(kClockOffset) += dt * P.row(kClockDrift);
    P.middleCols<3>(kPos) += dt * P.middleCols<3>(kVel);
    P.col(kClockOffset) += dt * P.col(kClockDrift);

    const double dt2 = dt * dt, dt3 = dt2 * dt;
    const double qa = q.accel_std * q.accel_std;
    for (int i = 0; i < 3; ++i) {
        P(kPos + i, kPos + i) += qa * dt3 / 3.0;
        P(kPos + i, kVel + i) += qa * dt2 / 2.0;
        P(kVel + i, kPos + i) += qa * dt2 / 2.0;
        P(kVel + i, kVel + i) += qa * dt;
    }
    const double qc = std::pow(kSpeedOfLight * q.drift_walk_std, 2);
    P(kClockOffset, kClockOffset) += qc * dt3 / 3.0;
    P(kClockOffset, kClockDrift) += qc * dt2 / 2.0;
    P(kClockDrift, kClockOffset) += qc * dt2 / 2.0;
    P(kClockDrift, kClockDrift) += qc * dt;

    P = 0.5 * (P + P.transpose()).eval();
    if (!is_positive_definite(P))
        throw EkfError("ekf_predict: covariance lost positive definiteness at t=" +
                       std::to_string(out.t) + " (dim " + std::to_string(P.rows()) + ")");
    return out;
}

/// Predicted observation and Jacobian for one TRP. Rows: azimuth, elevation
/// and, when `offset_index` is given, pseudorange c*toa = d3d + c*rho + c*b.
struct ObservationModel {
    VecX h;
    MatX H;
};

inline ObservationModel observation_model(const EkfState& s, const Vec3& trp_position,
                                          std::optional<int> offset_index)
{
    using namespace state_index;
    const int rows = offset_index ? 3 : 2;
    ObservationModel m{VecX::Zero(rows), MatX::Zero(rows, s.x.size())};
    const Vec3 d = s.position() - trp_position;
    const double r2 = d.x() * d.x() + d.y() * d.y();
    const double r = std::sqrt(r2);
    const double d3 = d.norm();
    const double rho2 = d3 * d3;

    m.h[0] = std::atan2(d.y(), d.x());
    m.H(0, kPos + 0) = -d.y() / r2;
    m.H(0, kPos + 1) = d.x() / r2;

    m.h[1] = std::atan2(d.z(), r);
    m.H(1, kPos + 0) = -d.z() * d.x() / (r * rho2);
    m.H(1, kPos + 1) = -d.z() * d.y() / (r * rho2);
    m.H(1, kPos + 2) = r / rho2;

    if (offset_index) {
        m.h[2] = d3 + s.x[kClockOffset] + s.x[*offset_index];
        m.H.block<1, 3>(2, kPos) = (d / d3).transpose();
        m.H(2, kClockOffset) = 1.0;
        m.H(2, *offset_index) = 1.0;
    }
    return m;
}

struct UpdateOptions {
    double trp_offset_prior_var = std::pow(kSpeedOfLight * 10e-6, 2) / 3.0;  // m^2
};

/// EKF measurement update with a Joseph-form covariance update. In doa_toa mode
/// unknown TRPs get an offset state appended on first contact. A singular
/// innovation covariance leaves the state untouched.
inline EkfState ekf_update(const EkfState& s, std::span<const Measurement> meas,
                           std::span<const TrpSite> trps, PositioningMode mode,
                           const MeasurementNoise& noise, const UpdateOptions& opt = {})
{
    EkfState st = s;
    if (meas.empty()) return st;
    const bool use_toa = mode == PositioningMode::doa_toa;
    auto trp_pos = [&](int id) -> const TrpSite& {
        for (const auto& t : trps)
            if (t.id == id) return t;
        throw std::invalid_argument("ekf_update: unknown TRP id " + std::to_string(id));
    };

    if (use_toa)
        for (const auto& m : meas) {
            if (!m.toa) throw std::invalid_argument("ekf_update: doa_toa mode needs ToA");
            if (!st.offset_index(m.trp_id)) st.add_trp_offset(m.trp_id, opt.trp_offset_prior_var);
        }

    const int per = use_toa ? 3 : 2;
    const int m_rows = per * static_cast<int>(meas.size());
    const int n = static_cast<int>(st.x.size());
    MatX H = MatX::Zero(m_rows, n);
    VecX y = VecX::Zero(m_rows);
    VecX r_diag = VecX::Zero(m_rows);

    for (std::size_t i = 0; i < meas.size(); ++i) {
        const auto& m = meas[i];
        const auto om = observation_model(st, trp_pos(m.trp_id).position,
                                          use_toa ? st.offset_index(m.trp_id) : std::nullopt);
        const int r0 = per * static_cast<int>(i);
        H.middleRows(r0, per) = om.H;
        y[r0] = wrap_angle(m.azimuth - om.h[0]);
        y[r0 + 1] = wrap_angle(m.elevation - om.h[1]);
        r_diag[r0] = noise.azimuth_std * noise.azimuth_std;
        r_diag[r0 + 1] = noise.elevation_std * noise.elevation_std;
        if (use_toa) {
            y[r0 + 2] = kSpeedOfLight * *m.toa - om.h[2];
            r_diag[r0 + 2] = std::pow(kSpeedOfLight * noise.toa_std(m.snr_db), 2);
        }
    }

    const MatX HP = H * st.P;
    MatX S = HP * H.transpose();
    S.diagonal() += r_diag;
    Eigen::LLT<MatX> llt(S);
    if (llt.info() != Eigen::Success || !y.allFinite() || !H.allFinite()) {
        spdlog::debug("ekf_update: singular innovation covariance at t={}, update skipped", s.t);
        return s;
    }
    const MatX K = llt.solve(HP).transpose();
    st.x += K * y;

    // Joseph form: (I - KH) P (I - KH)^T + K R K^T.
    const MatX AP = st.P - K * HP;
    MatX P = AP - (AP * H.transpose()) * K.transpose();
    P += K * r_diag.asDiagonal() * K.transpose();
    st.P = 0.5 * (P + P.transpose());
    return st;
}

// ---------------------------------------------------------------------------
// Tracking run

/// Up to two LoS TRPs with the smallest 3D distance, ties by lower id.
inline std::vector<std::size_t> select_serving_trps(const WorldGeometry& world,
                                                    std::span<const TrpSite> trps,
                                                    const Vec3& device_pos)
{
    std::vector<std::size_t> order(trps.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> dist(trps.size());
    for (std::size_t i = 0; i < trps.size(); ++i) dist[i] = (trps[i].position - device_pos).norm();
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (dist[a] != dist[b]) return dist[a] < dist[b];
        return trps[a].id < trps[b].id;
    });
    std::vector<std::size_t> out;
    for (auto i : order) {
        if (is_los(world, trps[i].position, device_pos)) out.push_back(i);
        if (out.size() == 2) break;
    }
    return out;
}

/// Least-squares intersection of the DoA rays of at least two measurements.
inline std::optional<Vec3> triangulate(std::span<const Measurement> meas,
                                       std::span<const TrpSite> trps)
{
    if (meas.size() < 2) return std::nullopt;
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    Vec3 b = Vec3::Zero();
    for (const auto& m : meas) {
        const TrpSite* trp = nullptr;
        for (const auto& t : trps)
            if (t.id == m.trp_id) trp = &t;
        if (!trp) continue;
        const Vec3 u = unit_vector({m.azimuth, m.elevation});
        const Eigen::Matrix3d proj = Eigen::Matrix3d::Identity() - u * u.transpose();
        A += proj;
        b += proj * trp->position;
    }
    const Vec3 ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(A, Eigen::EigenvaluesOnly).eigenvalues();
    if (!(ev[0] >= 1e-3 * ev[2])) return std::nullopt;
    return A.ldlt().solve(b);
}

struct TrackingOptions {
    PilotConfig pilot;
    MeasurementNoise noise;
    ProcessNoise process;
    ClockModel clock;
    double init_position_std = 5.0;
    double init_velocity_std = 10.0;
    double trp_offset_scale = 10e-6;  // uniform half-width of the TRP offsets

    bool operator==(const TrackingOptions&) const = default;
};

struct PositionEstimate {
    double t = 0.0;
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
    double p_trace = 0.0;
    double v_var = 0.0;  // horizontal velocity variance (trace of the x-y block), m^2/s^2

    bool operator==(const PositionEstimate&) const = default;
};

struct TrackingResult {
    std::vector<PositionEstimate> estimates;
    std::vector<Vec3> truth;  // true position at each estimate epoch
    int skipped_epochs = 0;
    EkfState final_state;
};

/// Filters one trajectory. The device clock evolves as an integrated random
/// walk; measurements come from the two closest LoS TRPs at every pilot epoch.
inline TrackingResult run_tracking(const Trajectory& trajectory, std::span<const TrpSite> trps,
                                   const WorldGeometry& world, PositioningMode mode,
                                   const TrackingOptions& opt, std::uint64_t seed)
{
    using namespace state_index;
    opt.pilot.validate();
    if (trajectory.size() < 2) throw std::invalid_argument("run_tracking: trajectory too short");
    const double traj_dt = trajectory[1].t - trajectory[0].t;
    if (traj_dt > opt.pilot.interval + 1e-12)
        throw std::invalid_argument("run_tracking: trajectory coarser than the pilot interval");
    const auto step = static_cast<std::size_t>(std::llround(opt.pilot.interval / traj_dt));

    Rng meas_rng = make_rng(seed, 0, "measurements");
    Rng clock_rng = make_rng(seed, 0, "device_clock");
    std::uniform_real_distribution<double> u_off(-opt.clock.device_offset_max,
                                                 opt.clock.device_offset_max);
    std::normal_distribution<double> n01(0.0, 1.0);

    DeviceClock clock{u_off(clock_rng), opt.clock.drift_init_std * n01(clock_rng)};
    const double qd = opt.clock.drift_walk_std * opt.clock.drift_walk_std;

    UpdateOptions upd;
    upd.trp_offset_prior_var = std::pow(kSpeedOfLight * opt.trp_offset_scale, 2) / 3.0;

    TrackingResult res;
    std::optional<EkfState> state;
    double t_prev = trajectory.front().t;
    const bool with_toa = mode == PositioningMode::doa_toa;

    for (std::size_t k = 0; k < trajectory.size(); k += step) {
        const auto& smp = trajectory[k];
        if (k > 0) {
            // Exact discretisation of the integrated random walk.
            const double dt = smp.t - t_prev;
            const double s11 = qd * dt * dt * dt / 3.0, s12 = qd * dt * dt / 2.0, s22 = qd * dt;
            const double l11 = std::sqrt(s11);
            const double l21 = l11 > 0.0 ? s12 / l11 : 0.0;
            const double l22 = std::sqrt(std::max(s22 - l21 * l21, 0.0));
            const double w1 = n01(clock_rng), w2 = n01(clock_rng);
            clock.offset += clock.drift * dt + l11 * w1;
            clock.drift += l21 * w1 + l22 * w2;
        }

        std::vector<Measurement> meas;
        for (auto i : select_serving_trps(world, trps, smp.position)) {
            const auto g = link_geometry(world, trps[i].position, smp.position);
            meas.push_back(generate_measurement(g, trps[i], clock, smp.t, opt.noise, opt.pilot,
                                                with_toa, meas_rng));
        }

        if (!state) {
            const auto p0 = triangulate(meas, trps);
            t_prev = smp.t;
            if (!p0) continue;
            EkfState s;
            s.t = smp.t;
            s.x.segment<3>(kPos) = *p0;
            s.P.setZero();
            s.P.diagonal().segment<3>(kPos).setConstant(std::pow(opt.init_position_std, 2));
            s.P.diagonal().segment<3>(kVel).setConstant(std::pow(opt.init_velocity_std, 2));
            s.P(kClockOffset, kClockOffset) =
                std::pow(kSpeedOfLight * opt.clock.device_offset_max, 2) / 3.0;
            s.P(kClockDrift, kClockDrift) = std::pow(kSpeedOfLight * opt.clock.drift_init_std, 2);
            state = s;
        } else {
            try {
                *state = ekf_predict(*state, smp.t - state->t, opt.process);
            } catch (const std::exception& e) {
                spdlog::warn("run_tracking: epoch {} skipped: {}", smp.t, e.what());
                ++res.skipped_epochs;
                t_prev = smp.t;
                continue;
            }
        }
        t_prev = smp.t;

        try {
            *state = ekf_update(*state, meas, trps, mode, opt.noise, upd);
        } catch (const std::exception& e) {
            spdlog::warn("run_tracking: update at {} skipped: {}", smp.t, e.what());
            ++res.skipped_epochs;
        }

        PositionEstimate est;
        est.t = smp.t;
        est.position = state->position();
        est.velocity = state->velocity();
        est.covariance = state->position_covariance();
        est.p_trace = est.covariance.trace();
        est.v_var = state->velocity_covariance().topLeftCorner<2, 2>().trace();
        res.estimates.push_back(est);
        res.truth.push_back(smp.position);
    }
    if (state) res.final_state = *state;
    return res;
}

}  // namespace posaid
