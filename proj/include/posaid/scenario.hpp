// Copyright 2026 The posaid Authors
// SPDX-License-Identifier: Apache-2.0

// World construction: Manhattan street lattice, TRP deployments and device
// trajectories. Everything here is a pure function of (config, seed).

#pragma once

#include "posaid/common.hpp"
#include "posaid/rng.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace posaid {

struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    bool contains(double x, double y) const { return x > x0 && x < x1 && y > y0 && y < y1; }
    bool contains_closed(double x, double y) const
    {
        return x >= x0 && x <= x1 && y >= y0 && y <= y1;
    }
    bool operator==(const Rect&) const = default;
};

struct Building {
    Rect footprint;
    double height = 0.0;
};

/// Street centerline between two graph nodes.
struct StreetSegment {
    std::size_t from = 0;
    std::size_t to = 0;
};

struct WorldGeometry {
    std::vector<Building> buildings;
    std::vector<Vec2> nodes;
    std::vector<StreetSegment> streets;
    Rect bounds;
    double street_width = 0.0;

    Vec2 start_of(const StreetSegment& s) const { return nodes.at(s.from); }
    Vec2 end_of(const StreetSegment& s) const { return nodes.at(s.to); }

    std::vector<std::vector<std::size_t>> adjacency() const
    {
        std::vector<std::vector<std::size_t>> adj(nodes.size());
        for (const auto& s : streets) {
            adj[s.from].push_back(s.to);
            adj[s.to].push_back(s.from);
        }
        for (auto& a : adj) std::sort(a.begin(), a.end());
        return adj;
    }
};

struct GridSpec {
    int blocks_x = 3;
    int blocks_y = 3;
    double block_size = 120.0;
    double street_width = 21.0;
    double building_height = 28.0;

    bool operator==(const GridSpec&) const = default;
};

/// Lattice of `blocks_x` x `blocks_y` square blocks, each surrounded by streets.
/// Street centerlines run through the middle of every street; the outermost
/// streets form a ring so the street graph is a full (bx+1) x (by+1) grid.
inline WorldGeometry build_manhattan_grid(const GridSpec& spec)
{
    if (spec.blocks_x < 1 || spec.blocks_y < 1)
        throw std::invalid_argument("build_manhattan_grid: block counts must be >= 1");
    if (!(spec.block_size > 0.0) || !(spec.street_width > 0.0) || !(spec.building_height > 0.0))
        throw std::invalid_argument(
            "build_manhattan_grid: block size, street width and building height must be positive");

    WorldGeometry w;
    const double pitch = spec.block_size + spec.street_width;
    const double half = spec.street_width / 2.0;
    w.street_width = spec.street_width;
    w.bounds = {0.0, 0.0, spec.blocks_x * pitch + spec.street_width,
                spec.blocks_y * pitch + spec.street_width};

    for (int j = 0; j < spec.blocks_y; ++j) {
        for (int i = 0; i < spec.blocks_x; ++i) {
            const double x0 = spec.street_width + i * pitch;
            const double y0 = spec.street_width + j * pitch;
            w.buildings.push_back(
                {{x0, y0, x0 + spec.block_size, y0 + spec.block_size}, spec.building_height});
        }
    }

    const int nx = spec.blocks_x + 1;
    const int ny = spec.blocks_y + 1;
    auto node_id = [nx](int i, int j) { return static_cast<std::size_t>(j * nx + i); };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) w.nodes.emplace_back(half + i * pitch, half + j * pitch);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) w.streets.push_back({node_id(i, j), node_id(i + 1, j)});
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j + 1 < ny; ++j) w.streets.push_back({node_id(i, j), node_id(i, j + 1)});
    return w;
}

struct LineSpec {
    int n_trps = 9;
    double isd = 50.0;
    double lateral_offset = 10.0;  // device track distance from the TRP line
    double margin = 50.0;
    double street_width = 21.0;

    bool operator==(const LineSpec&) const = default;
};

/// Open area without buildings: TRPs on the x axis, one street (the device
/// track) parallel to it at `lateral_offset`.
inline WorldGeometry build_line_world(const LineSpec& spec)
{
    if (spec.n_trps < 1 || !(spec.isd > 0.0) || !(spec.lateral_offset > 0.0))
        throw std::invalid_argument("build_line_world: need n_trps >= 1, isd > 0, offset > 0");
    WorldGeometry w;
    const double length = (spec.n_trps - 1) * spec.isd;
    w.street_width = spec.street_width;
    w.bounds = {-spec.margin, -spec.margin, length + spec.margin,
                spec.lateral_offset + spec.margin};
    w.nodes = {{0.0, spec.lateral_offset}, {length, spec.lateral_offset}};
    w.streets = {{0, 1}};
    return w;
}

// ---------------------------------------------------------------------------
// TRPs

enum class TrpLayout { street_furniture_grid, line };

struct ClockOffsetDistribution {
    enum class Kind { uniform, gaussian };
    Kind kind = Kind::uniform;
    double scale = 10e-6;  // half-width (uniform) or std (gaussian), seconds

    bool operator==(const ClockOffsetDistribution&) const = default;
};

struct TrpDeployment {
    double height = 7.0;
    double curb_offset = 9.0;  // lateral distance of street furniture from the centerline
    int line_count = 9;
    ClockOffsetDistribution clock;

    bool operator==(const TrpDeployment&) const = default;
};

struct TrpSite {
    int id = 0;
    Vec3 position = Vec3::Zero();
    double clock_offset = 0.0;       // seconds, constant per run
    double boresight_azimuth = 0.0;  // array facing, radians
};

namespace detail {

struct StreetLine {
    bool horizontal = true;
    double coord = 0.0;  // y for horizontal lines, x for vertical lines
    double lo = 0.0, hi = 0.0;
};

inline std::vector<StreetLine> street_lines(const WorldGeometry& w)
{
    // Collinear axis-aligned segments merged into full street lines.
    std::map<std::pair<bool, long long>, StreetLine> lines;
    for (const auto& s : w.streets) {
        const Vec2 a = w.start_of(s), b = w.end_of(s);
        const bool horizontal = std::abs(a.y() - b.y()) < 1e-9;
        if (!horizontal && std::abs(a.x() - b.x()) > 1e-9)
            throw std::invalid_argument("deploy_trps: street segments must be axis aligned");
        const double coord = horizontal ? a.y() : a.x();
        const double lo = horizontal ? std::min(a.x(), b.x()) : std::min(a.y(), b.y());
        const double hi = horizontal ? std::max(a.x(), b.x()) : std::max(a.y(), b.y());
        const auto key = std::make_pair(horizontal, std::llround(coord * 1e6));
        auto it = lines.find(key);
        if (it == lines.end()) {
            lines.emplace(key, StreetLine{horizontal, coord, lo, hi});
        } else {
            it->second.lo = std::min(it->second.lo, lo);
            it->second.hi = std::max(it->second.hi, hi);
        }
    }
    std::vector<StreetLine> out;
    for (auto& [k, v] : lines) out.push_back(v);
    return out;
}

inline double draw_clock_offset(const ClockOffsetDistribution& d, Rng& rng)
{
    if (d.kind == ClockOffsetDistribution::Kind::uniform) {
        std::uniform_real_distribution<double> u(-d.scale, d.scale);
        return u(rng);
    }
    std::normal_distribution<double> n(0.0, d.scale);
    return n(rng);
}

}  // namespace detail

/// Places TRPs either on street furniture along every street line (offset to
/// the curb, skipping spots that would stand inside a crossing street) or on a
/// straight line along +x from the origin. Each TRP faces the street it serves.
inline std::vector<TrpSite> deploy_trps(const WorldGeometry& world, double isd, TrpLayout layout,
                                        const TrpDeployment& dep, Rng& rng)
{
    if (!(isd > 0.0)) throw std::invalid_argument("deploy_trps: isd must be positive");

    std::vector<TrpSite> trps;
    auto add = [&](Vec3 p, double boresight) {
        for (const auto& t : trps)
            if ((t.position - p).norm() < 1e-6) return;
        trps.push_back({static_cast<int>(trps.size()), p, 0.0, boresight});
    };

    if (layout == TrpLayout::line) {
        if (dep.line_count < 1) throw std::invalid_argument("deploy_trps: line_count must be >= 1");
        for (int k = 0; k < dep.line_count; ++k) add({k * isd, 0.0, dep.height}, kPi / 2.0);
    } else {
        const auto lines = detail::street_lines(world);
        const double half = world.street_width / 2.0;
        double longest = 0.0;
        for (const auto& line : lines) {
            longest = std::max(longest, line.hi - line.lo);
            const int n = static_cast<int>(std::floor((line.hi - line.lo) / isd + 1e-9));
            for (int k = 0; k <= n; ++k) {
                const double s = line.lo + k * isd;
                const Vec2 p = line.horizontal ? Vec2{s, line.coord + dep.curb_offset}
                                               : Vec2{line.coord + dep.curb_offset, s};
                bool in_crossing = false;
                for (const auto& other : lines) {
                    if (other.horizontal == line.horizontal) continue;
                    const double across = other.horizontal ? p.y() : p.x();
                    const double along = other.horizontal ? p.x() : p.y();
                    if (std::abs(across - other.coord) < half && along >= other.lo - half &&
                        along <= other.hi + half)
                        in_crossing = true;
                }
                if (in_crossing) continue;
                // Face the centerline.
                const double sign = dep.curb_offset >= 0.0 ? -1.0 : 1.0;
                const double boresight = line.horizontal ? sign * kPi / 2.0
                                                         : (sign < 0.0 ? kPi : 0.0);
                add({p.x(), p.y(), dep.height}, boresight);
            }
        }
        if (longest > 0.0 && isd > longest)
            spdlog::warn("deploy_trps: isd {} m exceeds the longest street ({} m)", isd, longest);
        if (trps.empty() && !lines.empty()) {
            const auto& line = lines.front();
            const double s = 0.5 * (line.lo + line.hi);
            const Vec2 p = line.horizontal ? Vec2{s, line.coord + dep.curb_offset}
                                           : Vec2{line.coord + dep.curb_offset, s};
            spdlog::warn("deploy_trps: no regular site available, placing a single TRP");
            add({p.x(), p.y(), dep.height}, line.horizontal ? -kPi / 2.0 : kPi);
        }
    }

    for (auto& t : trps) t.clock_offset = detail::draw_clock_offset(dep.clock, rng);
    return trps;
}

// ---------------------------------------------------------------------------
// Devices and trajectories

enum class DeviceKind { pedestrian, vehicle, drone };

inline std::string_view to_string(DeviceKind k)
{
    switch (k) {
        case DeviceKind::pedestrian: return "pedestrian";
        case DeviceKind::vehicle: return "vehicle";
        case DeviceKind::drone: return "drone";
    }
    return "?";
}

inline DeviceKind parse_device_kind(std::string_view s)
{
    if (s == "pedestrian") return DeviceKind::pedestrian;
    if (s == "vehicle") return DeviceKind::vehicle;
    if (s == "drone") return DeviceKind::drone;
    throw std::invalid_argument("unknown device class '" + std::string(s) + "'");
}

struct DeviceClass {
    DeviceKind kind = DeviceKind::drone;
    double speed = 0.0;           // m/s
    double antenna_height = 0.0;  // m

    static DeviceClass defaults(DeviceKind kind)
    {
        switch (kind) {
            case DeviceKind::pedestrian: return {kind, kmph_to_mps(6.0), 1.2};
            case DeviceKind::vehicle: return {kind, kmph_to_mps(40.0), 1.5};
            case DeviceKind::drone: return {kind, kmph_to_mps(20.0), 5.0};
        }
        return {};
    }
};

enum class MobilityMode { street_random_walk, straight_line };

struct TrajectorySample {
    double t = 0.0;
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    Vec3 heading = Vec3::UnitX();

    bool operator==(const TrajectorySample&) const = default;
};

using Trajectory = std::vector<TrajectorySample>;

/// Number of uniformly spaced samples covering [0, duration] at step dt.
inline std::size_t sample_count(double duration, double dt)
{
    return static_cast<std::size_t>(std::floor(duration / dt + 1e-9)) + 1;
}

/// Constant-speed, constant-altitude motion along the street graph (random
/// walk with uniform choice among non-reversing turns) or along the first
/// street of the world in a straight line.
inline Trajectory generate_trajectory(const WorldGeometry& world, const DeviceClass& cls,
                                      double duration, double dt, std::uint64_t seed,
                                      MobilityMode mode)
{
    if (!(dt > 0.0)) throw std::invalid_argument("generate_trajectory: dt must be positive");
    if (duration < dt) throw std::invalid_argument("generate_trajectory: duration must be >= dt");
    if (world.streets.empty()) throw std::invalid_argument("generate_trajectory: empty street graph");

    struct Leg {
        Vec2 from, dir;
        double s0, s1;
    };
    std::vector<Leg> legs;
    const double total = cls.speed * duration;

    if (mode == MobilityMode::straight_line) {
        const auto& s = world.streets.front();
        const Vec2 a = world.start_of(s);
        const Vec2 d = (world.end_of(s) - a).normalized();
        legs.push_back({a, d, 0.0, std::max(total, 0.0) + 1.0});
    } else {
        Rng rng = make_rng(seed, 0, "trajectory");
        const auto adj = world.adjacency();
        std::vector<std::size_t> connected;
        for (std::size_t i = 0; i < adj.size(); ++i)
            if (!adj[i].empty()) connected.push_back(i);
        std::size_t cur = connected[std::uniform_int_distribution<std::size_t>(
            0, connected.size() - 1)(rng)];
        std::size_t prev = adj.size();
        double s = 0.0;
        do {
            std::vector<std::size_t> choices;
            for (auto n : adj[cur])
                if (n != prev) choices.push_back(n);
            if (choices.empty()) choices = adj[cur];
            const std::size_t next =
                choices[std::uniform_int_distribution<std::size_t>(0, choices.size() - 1)(rng)];
            const Vec2 a = world.nodes[cur];
            const Vec2 b = world.nodes[next];
            const double len = (b - a).norm();
            legs.push_back({a, (b - a) / len, s, s + len});
            s += len;
            prev = cur;
            cur = next;
        } while (s <= total);
    }

    const std::size_t n = sample_count(duration, dt);
    Trajectory out;
    out.reserve(n);
    std::size_t leg = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double s = cls.speed * t;
        while (leg + 1 < legs.size() && s >= legs[leg].s1) ++leg;
        const Leg& L = legs[leg];
        const Vec2 p = L.from + L.dir * (s - L.s0);
        TrajectorySample smp;
        smp.t = t;
        smp.position = {p.x(), p.y(), cls.antenna_height};
        smp.velocity = Vec3{L.dir.x(), L.dir.y(), 0.0} * cls.speed;
        smp.heading = Vec3{L.dir.x(), L.dir.y(), 0.0};
        out.push_back(smp);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Debug export

inline nlohmann::json to_json(const WorldGeometry& w, const std::vector<TrpSite>& trps = {})
{
    nlohmann::json j;
    j["bounds"] = {w.bounds.x0, w.bounds.y0, w.bounds.x1, w.bounds.y1};
    j["street_width"] = w.street_width;
    for (const auto& b : w.buildings)
        j["buildings"].push_back({{"footprint",
                                   {b.footprint.x0, b.footprint.y0, b.footprint.x1, b.footprint.y1}},
                                  {"height", b.height}});
    for (const auto& s : w.streets) {
        const Vec2 a = w.start_of(s), b = w.end_of(s);
        j["streets"].push_back({{a.x(), a.y()}, {b.x(), b.y()}});
    }
    for (const auto& t : trps)
        j["trps"].push_back({{"id", t.id},
                             {"position", {t.position.x(), t.position.y(), t.position.z()}},
                             {"clock_offset", t.clock_offset},
                             {"boresight_azimuth", t.boresight_azimuth}});
    return j;
}

}  // namespace posaid
