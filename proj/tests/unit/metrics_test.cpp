// Copyright 2026 The posaid Authors
// SPDX-License-Identifier: Apache-2.0

#include "posaid/metrics.hpp"

#include "support/generators.hpp"

#include <gtest/gtest.h>

#include <algorithm>

namespace posaid {
namespace {

std::vector<LinkRecord> run_with_rates(Strategy s, std::initializer_list<double> rates)
{
    std::vector<LinkRecord> out;
    for (double r : rates) {
        LinkRecord rec;
        rec.strategy = s;
        rec.rate_bps = r;
        out.push_back(rec);
    }
    return out;
}

TEST(CdfTest, SmallSampleQuantiles)
{
    const auto cdf = build_cdf({4.0, 1.0, 3.0, 2.0});
    EXPECT_DOUBLE_EQ(cdf.median(), 2.5);
    EXPECT_DOUBLE_EQ(cdf.quantile(0.0), 1.0);
    EXPECT_DOUBLE_EQ(cdf.quantile(1.0), 4.0);
    EXPECT_DOUBLE_EQ(fraction_below(cdf, 2.0), 0.5);
    EXPECT_DOUBLE_EQ(fraction_below(cdf, 0.5), 0.0);
    EXPECT_DOUBLE_EQ(fraction_below(cdf, 4.0), 1.0);
}

TEST(CdfTest, ConstantSamples)
{
    const auto cdf = build_cdf(std::vector<double>(50, 0.7));
    for (double q : {0.0, 0.3, 0.5, 0.85, 1.0}) EXPECT_DOUBLE_EQ(cdf.quantile(q), 0.7);
    EXPECT_DOUBLE_EQ(cdf.fraction_below(0.7), 1.0);
    EXPECT_DOUBLE_EQ(cdf.fraction_below(0.69), 0.0);
}

TEST(CdfTest, UniformSamplesApproachTheLine)
{
    Rng rng = make_rng(3, 0, "cdf");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(10000);
    for (auto& x : v) x = u(rng);
    const auto cdf = build_cdf(v);
    for (double q = 0.05; q < 1.0; q += 0.05) {
        EXPECT_NEAR(cdf.quantile(q), q, 0.02);
        EXPECT_NEAR(cdf.fraction_below(q), q, 0.02);
    }
}

TEST(CdfTest, Errors)
{
    EXPECT_THROW(build_cdf({}), std::invalid_argument);
    const auto cdf = build_cdf({1.0});
    EXPECT_THROW(fraction_below(cdf, -0.1), std::invalid_argument);
    EXPECT_THROW(cdf.quantile(1.5), std::invalid_argument);
    EXPECT_DOUBLE_EQ(cdf.median(), 1.0);
}

TEST(CdfProperty, QuantileAndFractionAreConsistent)
{
    testgen::Gen g(19);
    for (int c = 0; c < 200; ++c) {
        std::vector<double> v(static_cast<std::size_t>(g.integer(1, 300)));
        for (auto& x : v) x = std::abs(g.normal()) * g.uniform(0.1, 3.0);
        const auto cdf = build_cdf(v);
        double prev = -1.0;
        for (double q = 0.0; q <= 1.0; q += 0.01) {
            const double x = cdf.quantile(q);
            EXPECT_GE(x, prev);
            prev = x;
            // At least a q fraction of samples lies at or below the q-quantile.
            EXPECT_GE(cdf.fraction_below(x) + 1e-12, q - 1.0 / static_cast<double>(v.size()));
        }
        // Each sample value, as a threshold, counts its own rank.
        const auto& s = cdf.samples();
        for (std::size_t i = 0; i < s.size(); ++i) {
            const auto rank = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), s[i]) - s.begin());
            EXPECT_DOUBLE_EQ(cdf.fraction_below(s[i]), static_cast<double>(rank) / s.size());
        }
        std::vector<double> shuffled = v;
        std::shuffle(shuffled.begin(), shuffled.end(), g.rng());
        EXPECT_DOUBLE_EQ(build_cdf(shuffled).quantile(0.85), cdf.quantile(0.85));
    }
}

TEST(RateSummaryTest, MeanAndStandardError)
{
    const std::vector<std::vector<LinkRecord>> runs{run_with_rates(Strategy::proposed, {80.0, 80.0}),
                                                    run_with_rates(Strategy::proposed, {120.0})};
    const auto s = summarize_rates(runs, 10.0, DeviceKind::vehicle, 5.0);
    EXPECT_DOUBLE_EQ(s.mean_rate, 100.0);
    EXPECT_DOUBLE_EQ(s.std_error, 20.0);
    EXPECT_DOUBLE_EQ(s.mean_spectral_efficiency, 10.0);
    EXPECT_EQ(s.seeds, 2u);
    EXPECT_EQ(s.strategy, Strategy::proposed);
    EXPECT_EQ(s.device, DeviceKind::vehicle);
    EXPECT_DOUBLE_EQ(s.sweep_period, 5.0);
}

TEST(RateSummaryTest, ConstantRateHasNoSpread)
{
    std::vector<std::vector<LinkRecord>> runs(7, run_with_rates(Strategy::baseline, {100.0, 100.0, 100.0}));
    const auto s = summarize_rates(runs, 1.0);
    EXPECT_DOUBLE_EQ(s.mean_rate, 100.0);
    EXPECT_DOUBLE_EQ(s.std_error, 0.0);
}

TEST(RateSummaryTest, Errors)
{
    std::vector<std::vector<LinkRecord>> mixed{run_with_rates(Strategy::baseline, {1.0}),
                                               run_with_rates(Strategy::proposed, {1.0})};
    EXPECT_THROW(summarize_rates(mixed, 1.0), std::invalid_argument);
    EXPECT_THROW(summarize_rates(std::vector<std::vector<LinkRecord>>{}, 1.0), std::invalid_argument);
    EXPECT_THROW(mean_se(std::vector<double>{}), std::invalid_argument);
    EXPECT_THROW(mean_rate(std::vector<LinkRecord>{}), std::invalid_argument);
}

TEST(RateSummaryProperty, SeedOrderDoesNotMatter)
{
    testgen::Gen g(23);
    for (int c = 0; c < 100; ++c) {
        std::vector<std::vector<LinkRecord>> runs;
        const int n = g.integer(1, 12);
        for (int k = 0; k < n; ++k)
            runs.push_back(run_with_rates(Strategy::reference, {g.uniform(0.0, 8e8), g.uniform(0.0, 8e8)}));
        auto shuffled = runs;
        std::shuffle(shuffled.begin(), shuffled.end(), g.rng());
        const auto a = summarize_rates(runs, 100e6), b = summarize_rates(shuffled, 100e6);
        EXPECT_NEAR(a.mean_rate, b.mean_rate, 1e-6);
        EXPECT_NEAR(a.std_error, b.std_error, 1e-6);
        EXPECT_GE(a.std_error, 0.0);
    }
}

TEST(MetricsTest, PositionErrorsHonourWarmup)
{
    TrackingResult r;
    for (int k = 0; k < 10; ++k) {
        PositionEstimate e;
        e.t = k;
        e.position = {static_cast<double>(k), 0.0, 0.0};
        r.estimates.push_back(e);
        r.truth.push_back({0.0, 0.0, 0.0});
    }
    const auto e = position_errors(r, 5.0);
    ASSERT_EQ(e.size(), 5u);
    EXPECT_DOUBLE_EQ(e.front(), 5.0);
    EXPECT_DOUBLE_EQ(e.back(), 9.0);
}

}  // namespace
}  // namespace posaid
