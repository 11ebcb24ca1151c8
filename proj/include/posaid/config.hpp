// Copyright 2026 The posaid Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment configuration: INI sections [scenario], [radio], [positioning],
// [beam], [matrix] and [output]. Omitted keys keep their defaults.

#pragma once

#include "posaid/antenna.hpp"
#include "posaid/beam_mgmt.hpp"
#include "posaid/channel.hpp"
#include "posaid/link_sim.hpp"
#include "posaid/positioning.hpp"
#include "posaid/scenario.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace posaid {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string_view to_string(TrpLayout l)
{
    return l == TrpLayout::line ? "line" : "grid";
}

inline TrpLayout parse_layout(std::string_view s)
{
    if (s == "grid") return TrpLayout::street_furniture_grid;
    if (s == "line") return TrpLayout::line;
    throw std::invalid_argument("unknown layout '" + std::string(s) + "'");
}

inline std::string_view to_string(ClockOffsetDistribution::Kind k)
{
    return k == ClockOffsetDistribution::Kind::gaussian ? "gaussian" : "uniform";
}

inline ClockOffsetDistribution::Kind parse_clock_kind(std::string_view s)
{
    if (s == "uniform") return ClockOffsetDistribution::Kind::uniform;
    if (s == "gaussian") return ClockOffsetDistribution::Kind::gaussian;
    throw std::invalid_argument("unknown clock distribution '" + std::string(s) + "'");
}

inline std::string_view to_string(HeadingSource h)
{
    return h == HeadingSource::known_orientation ? "known_orientation" : "estimated_velocity";
}

inline HeadingSource parse_heading_source(std::string_view s)
{
    if (s == "estimated_velocity") return HeadingSource::estimated_velocity;
    if (s == "known_orientation") return HeadingSource::known_orientation;
    throw std::invalid_argument("unknown heading source '" + std::string(s) + "'");
}

struct ScenarioSettings {
    TrpLayout layout = TrpLayout::street_furniture_grid;
    GridSpec grid;
    LineSpec line;
    TrpDeployment trp;
    double duration = 60.0;
    double dt = 0.010;

    bool operator==(const ScenarioSettings&) const = default;
};

struct RadioSettings {
    RadioConfig radio;
    double se_cap = 7.8;

    bool operator==(const RadioSettings&) const = default;
};

struct PositioningSettings {
    std::vector<PositioningMode> modes{PositioningMode::doa_only, PositioningMode::doa_toa};
    PositioningMode rate_mode = PositioningMode::doa_toa;  // estimates fed to phase 2
    TrackingOptions tracking;
    double azimuth_std_deg = 2.0;
    double elevation_std_deg = 2.0;
    double accel_std = 0.0;  // <= 0: per-class default
    double warmup = 5.0;

    bool operator==(const PositioningSettings&) const = default;
};

struct BeamSettings {
    int trp_beams = 16;
    int device_beams = 8;
    int trp_array = 8;     // elements per side
    int device_array = 4;  // elements per side
    double subframe = 0.125e-3;
    double tti = 0.010;
    int stale_intervals = 3;
    double discovery_radius = 0.0;  // <= 0: twice the ISD
    HeadingSource heading_source = HeadingSource::estimated_velocity;
    double heading_smoothing = 0.25;
    double heading_confidence = 5.0;

    bool operator==(const BeamSettings&) const = default;
};

struct MatrixSettings {
    std::vector<Strategy> strategies{Strategy::baseline, Strategy::proposed, Strategy::reference,
                                     Strategy::hypothetical};
    std::vector<DeviceKind> classes{DeviceKind::pedestrian, DeviceKind::vehicle, DeviceKind::drone};
    std::vector<double> periods{1.0, 5.0};
    std::vector<double> isds{25.0, 50.0};
    int seeds = 20;
    std::uint64_t seed_base = 1;

    bool operator==(const MatrixSettings&) const = default;
};

struct OutputSettings {
    std::string dir = "out";
    bool trace = true;  // per-strategy SNR trace of the first seed (line layout)

    bool operator==(const OutputSettings&) const = default;
};

struct ExperimentConfig {
    ScenarioSettings scenario;
    RadioSettings radio;
    PositioningSettings positioning;
    BeamSettings beam;
    MatrixSettings matrix;
    OutputSettings output;

    bool operator==(const ExperimentConfig&) const = default;

    void validate() const;

    Codebooks codebooks() const
    {
        Codebooks b;
        b.trp = make_codebook({beam.trp_array, beam.trp_array, 0.5}, BeamOwner::trp, beam.trp_beams,
                              Sector{});
        b.device = make_codebook({beam.device_array, beam.device_array, 0.5}, BeamOwner::device,
                                 beam.device_beams,
                                 Sector{0.0, 2.0 * kPi, {kDeviceElevationTilt}});
        return b;
    }

    SweepSchedule schedule(double period) const
    {
        return {period, beam.subframe, beam.trp_beams * beam.device_beams};
    }

    RunConfig run_config(Strategy s, double period, double isd, std::uint64_t seed) const
    {
        RunConfig rc;
        rc.strategy = s;
        rc.heading_source = beam.heading_source;
        rc.heading_smoothing = beam.heading_smoothing;
        rc.heading_confidence = beam.heading_confidence;
        rc.schedule = schedule(period);
        rc.tti = beam.tti;
        rc.beacon_interval = positioning.tracking.pilot.interval;
        rc.stale_intervals = beam.stale_intervals;
        rc.discovery_radius = beam.discovery_radius > 0.0 ? beam.discovery_radius : 2.0 * isd;
        rc.se_cap = radio.se_cap;
        rc.radio = radio.radio;
        rc.seed = seed;
        return rc;
    }

    TrackingOptions tracking_options(DeviceKind kind) const
    {
        TrackingOptions o = positioning.tracking;
        o.process.accel_std = positioning.accel_std > 0.0 ? positioning.accel_std : default_accel_std(kind);
        o.noise.azimuth_std = deg_to_rad(positioning.azimuth_std_deg);
        o.noise.elevation_std = deg_to_rad(positioning.elevation_std_deg);
        o.trp_offset_scale = scenario.trp.clock.scale;
        return o;
    }

    /// World for the given inter-site distance (the line layout scales with it).
    WorldGeometry world(double isd) const
    {
        if (scenario.layout == TrpLayout::line) {
            LineSpec ls = scenario.line;
            ls.isd = isd;
            return build_line_world(ls);
        }
        return build_manhattan_grid(scenario.grid);
    }

    MobilityMode mobility() const
    {
        return scenario.layout == TrpLayout::line ? MobilityMode::straight_line
                                                  : MobilityMode::street_random_walk;
    }

    TrpDeployment deployment() const
    {
        TrpDeployment d = scenario.trp;
        d.line_count = scenario.line.n_trps;
        return d;
    }
};

namespace detail {

inline std::string format_double(double v) { return fmt::format("{}", v); }

inline double parse_double(const std::string& s)
{
    const char* b = s.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(b, &end);
    if (s.empty() || end != b + s.size() || errno == ERANGE || !std::isfinite(v))
        throw std::invalid_argument("number");
    return v;
}

inline long long parse_integer(const std::string& s)
{
    const char* b = s.c_str();
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(b, &end, 10);
    if (s.empty() || end != b + s.size() || errno == ERANGE) throw std::invalid_argument("integer");
    return v;
}

inline bool parse_bool(const std::string& s)
{
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    throw std::invalid_argument("boolean");
}

inline std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F&& fmt_one)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += fmt_one(v[i]);
    }
    return out;
}

struct Field {
    std::string section;
    std::string key;
    std::string type;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <class Access>
Field number(std::string sec, std::string key, Access acc)
{
    return {sec, key, "number",
            [acc](ExperimentConfig& c, const std::string& v) { acc(c) = parse_double(v); },
            [acc](const ExperimentConfig& c) { return format_double(acc(c)); }};
}

template <class Access>
Field integer(std::string sec, std::string key, Access acc)
{
    return {sec, key, "integer",
            [acc](ExperimentConfig& c, const std::string& v) {
                using T = std::remove_reference_t<decltype(acc(c))>;
                const long long x = parse_integer(v);
                if constexpr (std::is_unsigned_v<T>)
                    if (x < 0) throw std::invalid_argument("non-negative integer");
                acc(c) = static_cast<T>(x);
            },
            [acc](const ExperimentConfig& c) {
                return std::to_string(acc(c));
            }};
}

template <class Access>
Field boolean(std::string sec, std::string key, Access acc)
{
    return {sec, key, "boolean",
            [acc](ExperimentConfig& c, const std::string& v) { acc(c) = parse_bool(v); },
            [acc](const ExperimentConfig& c) {
                return std::string(acc(c) ? "true" : "false");
            }};
}

template <class Access, class Parse>
Field choice(std::string sec, std::string key, std::string type, Access acc, Parse parse)
{
    return {sec, key, type,
            [acc, parse](ExperimentConfig& c, const std::string& v) { acc(c) = parse(v); },
            [acc](const ExperimentConfig& c) {
                return std::string(to_string(acc(c)));
            }};
}

template <class Access, class Parse>
Field choice_list(std::string sec, std::string key, std::string type, Access acc, Parse parse)
{
    return {sec, key, type,
            [acc, parse](ExperimentConfig& c, const std::string& v) {
                auto& out = acc(c);
                out.clear();
                for (const auto& item : split_list(v)) out.push_back(parse(item));
            },
            [acc](const ExperimentConfig& c) {
                return join(acc(c),
                            [](auto x) { return std::string(to_string(x)); });
            }};
}

template <class Access>
Field number_list(std::string sec, std::string key, Access acc)
{
    return {sec, key, "list of numbers",
            [acc](ExperimentConfig& c, const std::string& v) {
                auto& out = acc(c);
                out.clear();
                for (const auto& item : split_list(v)) out.push_back(parse_double(item));
            },
            [acc](const ExperimentConfig& c) {
                return join(acc(c), format_double);
            }};
}

#define POSAID_FIELD(expr) [](auto& c) -> auto& { return c.expr; }

inline const std::vector<Field>& config_fields()
{
    static const std::vector<Field> fields = [] {
        std::vector<Field> f;
        f.push_back(choice("scenario", "layout", "grid|line", POSAID_FIELD(scenario.layout), parse_layout));
        f.push_back(integer("scenario", "blocks_x", POSAID_FIELD(scenario.grid.blocks_x)));
        f.push_back(integer("scenario", "blocks_y", POSAID_FIELD(scenario.grid.blocks_y)));
        f.push_back(number("scenario", "block_size", POSAID_FIELD(scenario.grid.block_size)));
        f.push_back(number("scenario", "street_width", POSAID_FIELD(scenario.grid.street_width)));
        f.push_back(number("scenario", "building_height", POSAID_FIELD(scenario.grid.building_height)));
        f.push_back(integer("scenario", "line_trps", POSAID_FIELD(scenario.line.n_trps)));
        f.push_back(number("scenario", "line_offset", POSAID_FIELD(scenario.line.lateral_offset)));
        f.push_back(number("scenario", "line_margin", POSAID_FIELD(scenario.line.margin)));
        f.push_back(number("scenario", "trp_height", POSAID_FIELD(scenario.trp.height)));
        f.push_back(number("scenario", "curb_offset", POSAID_FIELD(scenario.trp.curb_offset)));
        f.push_back(choice("scenario", "trp_clock", "uniform|gaussian",
                           POSAID_FIELD(scenario.trp.clock.kind), parse_clock_kind));
        f.push_back(number("scenario", "trp_clock_scale", POSAID_FIELD(scenario.trp.clock.scale)));
        f.push_back(number("scenario", "duration", POSAID_FIELD(scenario.duration)));
        f.push_back(number("scenario", "dt", POSAID_FIELD(scenario.dt)));

        f.push_back(number("radio", "carrier_frequency", POSAID_FIELD(radio.radio.carrier_frequency)));
        f.push_back(number("radio", "bandwidth", POSAID_FIELD(radio.radio.bandwidth)));
        f.push_back(number("radio", "subcarrier_spacing", POSAID_FIELD(radio.radio.subcarrier_spacing)));
        f.push_back(number("radio", "tx_power", POSAID_FIELD(radio.radio.tx_power)));
        f.push_back(number("radio", "noise_figure", POSAID_FIELD(radio.radio.noise_figure)));
        f.push_back(boolean("radio", "shadowing", POSAID_FIELD(radio.radio.shadowing)));
        f.push_back(number("radio", "se_cap", POSAID_FIELD(radio.se_cap)));

        f.push_back(choice_list("positioning", "modes", "list of doa_only|doa_toa",
                                POSAID_FIELD(positioning.modes), parse_positioning_mode));
        f.push_back(choice("positioning", "rate_mode", "doa_only|doa_toa",
                           POSAID_FIELD(positioning.rate_mode), parse_positioning_mode));
        f.push_back(number("positioning", "beacon_interval",
                           POSAID_FIELD(positioning.tracking.pilot.interval)));
        f.push_back(integer("positioning", "pilot_subcarriers",
                            POSAID_FIELD(positioning.tracking.pilot.n_pilot_subcarriers)));
        f.push_back(number("positioning", "pilot_scs", POSAID_FIELD(positioning.tracking.pilot.pilot_scs)));
        f.push_back(number("positioning", "pilot_bandwidth",
                           POSAID_FIELD(positioning.tracking.pilot.effective_bandwidth)));
        f.push_back(number("positioning", "pilot_carrier",
                           POSAID_FIELD(positioning.tracking.pilot.carrier_frequency)));
        f.push_back(number("positioning", "pilot_power", POSAID_FIELD(positioning.tracking.pilot.tx_power)));
        f.push_back(number("positioning", "pilot_noise_figure",
                           POSAID_FIELD(positioning.tracking.pilot.noise_figure)));
        f.push_back(number("positioning", "azimuth_std_deg", POSAID_FIELD(positioning.azimuth_std_deg)));
        f.push_back(number("positioning", "elevation_std_deg",
                           POSAID_FIELD(positioning.elevation_std_deg)));
        f.push_back(number("positioning", "range_std_at_0db",
                           POSAID_FIELD(positioning.tracking.noise.range_std_at_0db)));
        f.push_back(number("positioning", "range_std_floor",
                           POSAID_FIELD(positioning.tracking.noise.range_std_floor)));
        f.push_back(boolean("positioning", "measurement_noise",
                            POSAID_FIELD(positioning.tracking.noise.enabled)));
        f.push_back(number("positioning", "accel_std", POSAID_FIELD(positioning.accel_std)));
        f.push_back(number("positioning", "drift_walk_std",
                           POSAID_FIELD(positioning.tracking.clock.drift_walk_std)));
        f.push_back(number("positioning", "filter_drift_walk_std",
                           POSAID_FIELD(positioning.tracking.process.drift_walk_std)));
        f.push_back(number("positioning", "device_offset_max",
                           POSAID_FIELD(positioning.tracking.clock.device_offset_max)));
        f.push_back(number("positioning", "drift_init_std",
                           POSAID_FIELD(positioning.tracking.clock.drift_init_std)));
        f.push_back(number("positioning", "init_position_std",
                           POSAID_FIELD(positioning.tracking.init_position_std)));
        f.push_back(number("positioning", "init_velocity_std",
                           POSAID_FIELD(positioning.tracking.init_velocity_std)));
        f.push_back(number("positioning", "warmup", POSAID_FIELD(positioning.warmup)));

        f.push_back(integer("beam", "trp_beams", POSAID_FIELD(beam.trp_beams)));
        f.push_back(integer("beam", "device_beams", POSAID_FIELD(beam.device_beams)));
        f.push_back(integer("beam", "trp_array", POSAID_FIELD(beam.trp_array)));
        f.push_back(integer("beam", "device_array", POSAID_FIELD(beam.device_array)));
        f.push_back(number("beam", "subframe", POSAID_FIELD(beam.subframe)));
        f.push_back(number("beam", "tti", POSAID_FIELD(beam.tti)));
        f.push_back(integer("beam", "stale_intervals", POSAID_FIELD(beam.stale_intervals)));
        f.push_back(number("beam", "discovery_radius", POSAID_FIELD(beam.discovery_radius)));
        f.push_back(choice("beam", "heading_source", "estimated_velocity|known_orientation",
                           POSAID_FIELD(beam.heading_source), parse_heading_source));
        f.push_back(number("beam", "heading_smoothing", POSAID_FIELD(beam.heading_smoothing)));
        f.push_back(number("beam", "heading_confidence", POSAID_FIELD(beam.heading_confidence)));

        f.push_back(choice_list("matrix", "strategies", "list of strategies",
                                POSAID_FIELD(matrix.strategies), parse_strategy));
        f.push_back(choice_list("matrix", "classes", "list of pedestrian|vehicle|drone",
                                POSAID_FIELD(matrix.classes), parse_device_kind));
        f.push_back(number_list("matrix", "periods", POSAID_FIELD(matrix.periods)));
        f.push_back(number_list("matrix", "isds", POSAID_FIELD(matrix.isds)));
        f.push_back(integer("matrix", "seeds", POSAID_FIELD(matrix.seeds)));
        f.push_back(integer("matrix", "seed_base", POSAID_FIELD(matrix.seed_base)));

        f.push_back({"output", "dir", "string",
                     [](ExperimentConfig& c, const std::string& v) { c.output.dir = v; },
                     [](const ExperimentConfig& c) { return c.output.dir; }});
        f.push_back(boolean("output", "trace", POSAID_FIELD(output.trace)));
        return f;
    }();
    return fields;
}

#undef POSAID_FIELD

}  // namespace detail

inline void ExperimentConfig::validate() const
{
    auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
    auto positive = [&](double v, const char* path) {
        if (!(v > 0.0)) fail(std::string(path) + " must be positive");
    };
    if (scenario.grid.blocks_x < 1 || scenario.grid.blocks_y < 1)
        fail("scenario.blocks_x and scenario.blocks_y must be >= 1");
    positive(scenario.grid.block_size, "scenario.block_size");
    positive(scenario.grid.street_width, "scenario.street_width");
    positive(scenario.grid.building_height, "scenario.building_height");
    if (scenario.line.n_trps < 1) fail("scenario.line_trps must be >= 1");
    positive(scenario.line.lateral_offset, "scenario.line_offset");
    if (scenario.line.margin < 0.0) fail("scenario.line_margin must be non-negative");
    positive(scenario.trp.height, "scenario.trp_height");
    if (scenario.trp.curb_offset < 0.0) fail("scenario.curb_offset must be non-negative");
    if (scenario.trp.clock.scale < 0.0) fail("scenario.trp_clock_scale must be non-negative");
    positive(scenario.dt, "scenario.dt");
    if (!(scenario.duration >= scenario.dt)) fail("scenario.duration must be >= scenario.dt");

    try {
        radio.radio.validate();
        positioning.tracking.pilot.validate();
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
    if (positioning.modes.empty()) fail("positioning.modes must not be empty");
    if (positioning.azimuth_std_deg < 0.0 || positioning.elevation_std_deg < 0.0 ||
        positioning.tracking.noise.range_std_at_0db < 0.0 || positioning.tracking.noise.range_std_floor < 0.0)
        fail("positioning noise settings must be non-negative");
    if (positioning.tracking.clock.drift_walk_std < 0.0 ||
        positioning.tracking.process.drift_walk_std < 0.0 ||
        positioning.tracking.clock.device_offset_max < 0.0 ||
        positioning.tracking.clock.drift_init_std < 0.0)
        fail("positioning clock settings must be non-negative");
    positive(positioning.tracking.init_position_std, "positioning.init_position_std");
    positive(positioning.tracking.init_velocity_std, "positioning.init_velocity_std");
    if (positioning.warmup < 0.0) fail("positioning.warmup must be non-negative");

    if (beam.trp_beams < 1 || beam.device_beams < 1) fail("beam counts must be >= 1");
    if (beam.trp_array < 1 || beam.device_array < 1) fail("array sizes must be >= 1");
    if (beam.trp_beams % 2 != 0) fail("beam.trp_beams must be even (two elevation rows)");
    positive(beam.subframe, "beam.subframe");
    positive(beam.tti, "beam.tti");
    if (beam.tti > positioning.tracking.pilot.interval + 1e-12)
        fail("beam.tti must not exceed positioning.beacon_interval");
    if (beam.stale_intervals < 0) fail("beam.stale_intervals must be non-negative");
    if (beam.heading_smoothing < 0.0) fail("beam.heading_smoothing must be non-negative");
    if (beam.heading_confidence < 0.0) fail("beam.heading_confidence must be non-negative");

    if (matrix.isds.empty()) fail("matrix.isds must not be empty");
    for (double isd : matrix.isds) positive(isd, "matrix.isds");
    if (matrix.periods.empty()) fail("matrix.periods must not be empty");
    for (double p : matrix.periods) {
        if (!(p > schedule(p).duration()))
            fail("matrix.periods must exceed the sweep duration (" +
                 detail::format_double(schedule(p).duration()) + " s)");
    }
    if (matrix.seeds < 1) fail("matrix.seeds must be >= 1");
    if (output.dir.empty()) fail("output.dir must not be empty");
}

/// Parses INI text. Unknown sections or keys, malformed values and failed
/// domain checks raise ConfigError.
inline ExperimentConfig parse_config_string(const std::string& text)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(fmt::format("config: line {}: {}", e.line(), e.message()));
    }
    ExperimentConfig cfg;
    const auto& fields = detail::config_fields();
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError("config: key '" + section + "' outside of any section");
        const bool known_section =
            std::any_of(fields.begin(), fields.end(), [&](const auto& f) { return f.section == section; });
        if (!known_section) throw ConfigError("config: unknown section [" + section + "]");
        for (const auto& [key, node] : body) {
            const auto it = std::find_if(fields.begin(), fields.end(), [&](const auto& f) {
                return f.section == section && f.key == key;
            });
            if (it == fields.end())
                throw ConfigError("config: unknown key '" + section + "." + key + "'");
            const std::string value = detail::trim(node.data());
            try {
                it->set(cfg, value);
            } catch (const std::invalid_argument& e) {
                throw ConfigError("config: " + section + "." + key + ": expected " + it->type +
                                  ", got '" + value + "'");
            }
        }
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig parse_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_string(ss.str());
}

/// Writes every key, so the output doubles as a fully expanded config.
inline std::string serialize_config(const ExperimentConfig& cfg)
{
    std::string out;
    std::string section;
    for (const auto& f : detail::config_fields()) {
        if (f.section != section) {
            if (!section.empty()) out += "\n";
            section = f.section;
            out += "[" + section + "]\n";
        }
        out += f.key + " = " + f.get(cfg) + "\n";
    }
    return out;
}

}  // namespace posaid
