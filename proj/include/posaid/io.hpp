// Copyright 2026 The posaid Authors
// SPDX-License-Identifier: Apache-2.0

// CSV files exchanged between the two phases and read back by the report step.
// Numbers are written in shortest round-trip form so a reload is exact.

#pragma once

#include "posaid/link_sim.hpp"
#include "posaid/positioning.hpp"

#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace posaid {

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double csv_double(const std::string& s, const std::filesystem::path& file, std::size_t row)
{
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw CsvError(fmt::format("{}: row {}: '{}' is not a number", file.string(), row, s));
    return v;
}

/// Reads a CSV whose header must equal `header`; returns the data rows.
inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& file,
                                                      const std::string& header)
{
    std::ifstream in(file);
    if (!in) throw CsvError("cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line) || line != header)
        throw CsvError(file.string() + ": expected header '" + header + "'");
    std::vector<std::vector<std::string>> rows;
    const std::size_t cols = split_csv_line(header).size();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != cols)
            throw CsvError(fmt::format("{}: row {} has {} columns, expected {}", file.string(),
                                       rows.size() + 1, cells.size(), cols));
        rows.push_back(std::move(cells));
    }
    return rows;
}

inline std::ofstream open_for_write(const std::filesystem::path& file)
{
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw CsvError("cannot write " + file.string());
    return out;
}

}  // namespace detail

inline constexpr const char* kEstimateHeader = "t,x,y,z,p_trace,mode,vx,vy,vz,v_var";
inline constexpr const char* kErrorHeader = "t,error_m";
inline constexpr const char* kLinkHeader = "t,strategy,trp_id,trp_beam,device_beam,snr_db,rate_bps,los";

inline void write_estimates_csv(const std::filesystem::path& file,
                                std::span<const PositionEstimate> est, PositioningMode mode)
{
    auto out = detail::open_for_write(file);
    out << kEstimateHeader << '\n';
    const auto m = to_string(mode);
    for (const auto& e : est)
        out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", e.t, e.position.x(), e.position.y(),
                           e.position.z(), e.p_trace, m, e.velocity.x(), e.velocity.y(),
                           e.velocity.z(), e.v_var);
}

/// Loads an estimate stream. Only the trace of the position covariance is
/// stored, so the reloaded covariance is diagonal with that trace split evenly.
inline std::vector<PositionEstimate> read_estimates_csv(const std::filesystem::path& file)
{
    std::vector<PositionEstimate> out;
    std::size_t row = 0;
    for (const auto& c : detail::read_csv(file, kEstimateHeader)) {
        ++row;
        auto num = [&](std::size_t i) { return detail::csv_double(c[i], file, row); };
        PositionEstimate e;
        e.t = num(0);
        e.position = {num(1), num(2), num(3)};
        e.p_trace = num(4);
        parse_positioning_mode(c[5]);
        e.velocity = {num(6), num(7), num(8)};
        e.v_var = num(9);
        e.covariance = Eigen::Matrix3d::Identity() * (e.p_trace / 3.0);
        out.push_back(e);
    }
    return out;
}

inline void write_errors_csv(const std::filesystem::path& file, const TrackingResult& r)
{
    auto out = detail::open_for_write(file);
    out << kErrorHeader << '\n';
    for (std::size_t i = 0; i < r.estimates.size(); ++i)
        out << fmt::format("{},{}\n", r.estimates[i].t, (r.estimates[i].position - r.truth[i]).norm());
}

struct TimedError {
    double t = 0.0;
    double error = 0.0;
};

inline std::vector<TimedError> read_errors_csv(const std::filesystem::path& file)
{
    std::vector<TimedError> out;
    std::size_t row = 0;
    for (const auto& c : detail::read_csv(file, kErrorHeader)) {
        ++row;
        out.push_back({detail::csv_double(c[0], file, row), detail::csv_double(c[1], file, row)});
    }
    return out;
}

inline void write_links_csv(const std::filesystem::path& file, std::span<const LinkRecord> recs)
{
    auto out = detail::open_for_write(file);
    out << kLinkHeader << '\n';
    for (const auto& r : recs)
        out << fmt::format("{},{},{},{},{},{},{},{}\n", r.t, to_string(r.strategy), r.trp_id,
                           r.trp_beam, r.device_beam, r.snr_db, r.rate_bps, r.los ? 1 : 0);
}

inline std::vector<LinkRecord> read_links_csv(const std::filesystem::path& file)
{
    std::vector<LinkRecord> out;
    std::size_t row = 0;
    for (const auto& c : detail::read_csv(file, kLinkHeader)) {
        ++row;
        auto num = [&](std::size_t i) { return detail::csv_double(c[i], file, row); };
        LinkRecord r;
        r.t = num(0);
        r.strategy = parse_strategy(c[1]);
        r.trp_id = static_cast<int>(num(2));
        r.trp_beam = static_cast<std::size_t>(num(3));
        r.device_beam = static_cast<std::size_t>(num(4));
        r.snr_db = num(5);
        r.rate_bps = num(6);
        r.los = c[7] == "1";
        out.push_back(r);
    }
    return out;
}

}  // namespace posaid
