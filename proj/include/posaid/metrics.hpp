// Copyright 2026 The posaid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "posaid/beam_mgmt.hpp"
#include "posaid/link_sim.hpp"
#include "posaid/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace posaid {

class ErrorCdf {
public:
    explicit ErrorCdf(std::vector<double> samples) : samples_(std::move(samples))
    {
        if (samples_.empty()) throw std::invalid_argument("ErrorCdf: no samples");
        std::sort(samples_.begin(), samples_.end());
    }

    const std::vector<double>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }

    /// Linear interpolation between order statistics: q=0 is the minimum, q=1 the maximum.
    double quantile(double q) const
    {
        if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("ErrorCdf: q outside [0, 1]");
        const double h = q * static_cast<double>(samples_.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const auto hi = std::min(lo + 1, samples_.size() - 1);
        return samples_[lo] + (h - static_cast<double>(lo)) * (samples_[hi] - samples_[lo]);
    }

    /// Empirical P(error <= threshold).
    double fraction_below(double threshold) const
    {
        const auto it = std::upper_bound(samples_.begin(), samples_.end(), threshold);
        return static_cast<double>(it - samples_.begin()) / static_cast<double>(samples_.size());
    }

    double median() const { return quantile(0.5); }

private:
    std::vector<double> samples_;
};

inline ErrorCdf build_cdf(std::vector<double> errors) { return ErrorCdf(std::move(errors)); }

inline double fraction_below(const ErrorCdf& cdf, double threshold)
{
    if (threshold < 0.0) throw std::invalid_argument("fraction_below: negative threshold");
    return cdf.fraction_below(threshold);
}

/// 3D errors of the estimates at or after `warmup` seconds.
inline std::vector<double> position_errors(const TrackingResult& r, double warmup)
{
    std::vector<double> e;
    for (std::size_t i = 0; i < r.estimates.size(); ++i)
        if (r.estimates[i].t >= warmup - 1e-9)
            e.push_back((r.estimates[i].position - r.truth[i]).norm());
    return e;
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

/// Mean and standard error (sample std / sqrt(n)) of per-seed values.
inline MeanSe mean_se(std::span<const double> v)
{
    if (v.empty()) throw std::invalid_argument("mean_se: empty input");
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

struct RateSummary {
    Strategy strategy = Strategy::baseline;
    DeviceKind device = DeviceKind::drone;
    double sweep_period = 0.0;
    double mean_rate = 0.0;  // bit/s
    double mean_spectral_efficiency = 0.0;
    double std_error = 0.0;  // bit/s, across seeds
    std::size_t seeds = 0;
};

inline double mean_rate(std::span<const LinkRecord> run)
{
    if (run.empty()) throw std::invalid_argument("mean_rate: empty run");
    double s = 0.0;
    for (const auto& r : run) s += r.rate_bps;
    return s / static_cast<double>(run.size());
}

/// Time average per seed, then mean and standard error across seeds.
inline RateSummary summarize_rates(std::span<const std::vector<LinkRecord>> runs, double bandwidth,
                                   DeviceKind device = DeviceKind::drone, double sweep_period = 0.0)
{
    if (runs.empty() || runs.front().empty())
        throw std::invalid_argument("summarize_rates: no records");
    const Strategy strategy = runs.front().front().strategy;
    std::vector<double> per_seed;
    for (const auto& run : runs) {
        for (const auto& r : run)
            if (r.strategy != strategy)
                throw std::invalid_argument("summarize_rates: mixed strategies in one summary");
        per_seed.push_back(mean_rate(run));
    }
    const auto ms = mean_se(per_seed);
    RateSummary s;
    s.strategy = strategy;
    s.device = device;
    s.sweep_period = sweep_period;
    s.mean_rate = ms.mean;
    s.std_error = ms.se;
    s.mean_spectral_efficiency = ms.mean / bandwidth;
    s.seeds = per_seed.size();
    return s;
}

}  // namespace posaid
