// Copyright 2026 The posaid Authors
// SPDX-License-Identifier: Apache-2.0

#include "posaid/channel.hpp"

#include "support/generators.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace posaid {
namespace {

LinkGeometry los_link(double d3d, double h_bs = 7.0, double h_ut = 1.5)
{
    LinkGeometry g;
    g.d3d = d3d;
    g.d2d = std::sqrt(std::max(d3d * d3d - (h_bs - h_ut) * (h_bs - h_ut), 0.0));
    g.trp_height = h_bs;
    g.device_height = h_ut;
    g.los = true;
    return g;
}

TEST(ChannelTest, SameStreetIsLos)
{
    const auto w = build_manhattan_grid({});
    EXPECT_TRUE(is_los(w, {10.5, 10.5, 7.0}, {400.0, 10.5, 1.5}));
}

TEST(ChannelTest, BlockBetweenPointsBlocks)
{
    const auto w = build_manhattan_grid({});
    // Opposite sides of the first block, through its middle.
    EXPECT_FALSE(is_los(w, {10.5, 81.0, 7.0}, {151.5, 81.0, 1.5}));
    // Above the rooftops the block no longer blocks.
    EXPECT_TRUE(is_los(w, {10.5, 81.0, 30.0}, {151.5, 81.0, 29.0}));
}

TEST(ChannelTest, LinkGeometryInvariants)
{
    const auto w = build_manhattan_grid({});
    testgen::Gen g(3);
    for (int c = 0; c < 500; ++c) {
        const Vec3 a = g.point_in_world(w, 0.5, 10.0), b = g.point_in_world(w, 0.5, 10.0);
        const auto lg = link_geometry(w, a, b);
        EXPECT_GE(lg.d3d, lg.d2d);
        EXPECT_NEAR(lg.d3d * lg.d3d, lg.d2d * lg.d2d + (a.z() - b.z()) * (a.z() - b.z()), 1e-9);
        for (double ang : {lg.azimuth_at_trp, lg.azimuth_at_device}) {
            EXPECT_GT(ang, -kPi);
            EXPECT_LE(ang, kPi);
        }
        // Reverse link sees the forward azimuth rotated by pi.
        const auto rev = link_geometry(w, b, a);
        EXPECT_NEAR(std::abs(wrap_angle(rev.azimuth_at_device - lg.azimuth_at_trp)), 0.0, 1e-9);
        EXPECT_NEAR(std::abs(wrap_angle(lg.azimuth_at_device - lg.azimuth_at_trp - kPi)), 0.0, 1e-9);
        EXPECT_NEAR(lg.elevation_at_device, -lg.elevation_at_trp, 1e-12);
        EXPECT_EQ(is_los(w, a, b), is_los(w, b, a));
    }
}

TEST(ChannelTest, IsLosMatchesSamplingOracle)
{
    const auto w = build_manhattan_grid({});
    testgen::Gen g(17);
    int blocked = 0;
    for (int c = 0; c < 1000; ++c) {
        const Vec3 a = g.street_point(w, g.uniform(1.0, 8.0));
        const Vec3 b = g.coin() ? g.street_point(w, g.uniform(1.0, 8.0)) : g.point_in_world(w, 1.0, 35.0);
        const bool los = is_los(w, a, b);
        blocked += los ? 0 : 1;
        EXPECT_EQ(los, testgen::sampled_los(w, a, b, 0.05)) << "case " << c;
    }
    EXPECT_GT(blocked, 100);
    EXPECT_LT(blocked, 900);
}

TEST(ChannelTest, LosPathLossAtTwentyFiveMetres)
{
    RadioConfig radio;
    radio.shadowing = false;
    const double expected = 32.4 + 21.0 * std::log10(25.0) + 20.0 * std::log10(28.0);
    EXPECT_NEAR(expected, 90.70, 0.01);
    EXPECT_NEAR(path_loss_db(los_link(25.0), radio, 0.0), expected, 1e-9);
}

TEST(ChannelTest, NlosNeverBelowLos)
{
    for (double d = 1.0; d < 2000.0; d *= 1.15) {
        auto g = los_link(d);
        const double los = umi_path_loss_db(g.d2d, g.d3d, 28e9, 7.0, 1.5, true);
        const double nlos = umi_path_loss_db(g.d2d, g.d3d, 28e9, 7.0, 1.5, false);
        EXPECT_GE(nlos, los);
    }
}

TEST(ChannelTest, PathLossMonotoneInDistance)
{
    // Checked on each side of the LoS breakpoint distance (about 1121 m).
    for (bool los : {true, false}) {
        for (auto [lo, hi] : {std::pair{6.0, 1100.0}, std::pair{1150.0, 3000.0}}) {
            double prev = -1e9;
            for (double d = lo; d < hi; d += 0.5) {
                auto g = los_link(d);
                const double pl = umi_path_loss_db(g.d2d, g.d3d, 28e9, 7.0, 1.5, los);
                EXPECT_GE(pl, prev - 1e-12) << "d=" << d;
                prev = pl;
            }
        }
    }
}

TEST(ChannelTest, BreakpointBranchIsUsedFarAway)
{
    // d_bp = 4 (7-1)(1.5-1) fc/c, about 1121 m at 28 GHz.
    const double d_bp = 4.0 * 6.0 * 0.5 * 28e9 / kSpeedOfLight;
    const double d = 2000.0;
    const double expected = 32.4 + 40.0 * std::log10(d) + 20.0 * std::log10(28.0) -
                            9.5 * std::log10(d_bp * d_bp + 5.5 * 5.5);
    EXPECT_NEAR(umi_path_loss_db(d, d, 28e9, 7.0, 1.5, true), expected, 1e-9);
}

TEST(ChannelTest, ShortDistanceClampedToOneMetre)
{
    EXPECT_DOUBLE_EQ(umi_path_loss_db(0.1, 0.2, 28e9, 7.0, 1.5, true),
                     umi_path_loss_db(0.1, 1.0, 28e9, 7.0, 1.5, true));
}

TEST(ChannelTest, ShadowingSigma)
{
    RadioConfig radio;
    for (bool los : {true, false}) {
        auto g = los_link(40.0);
        g.los = los;
        const double median = umi_path_loss_db(g.d2d, g.d3d, 28e9, 7.0, 1.5, los);
        Rng rng = make_rng(9, 0, "shadow_test");
        const int n = 10000;
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = path_loss_db(g, radio, rng) - median;
            s += x;
            s2 += x * x;
        }
        const double mean = s / n;
        const double sigma = std::sqrt(s2 / n - mean * mean);
        EXPECT_NEAR(sigma, shadowing_sigma_db(los), 0.05 * shadowing_sigma_db(los));
    }
    EXPECT_DOUBLE_EQ(shadowing_sigma_db(true), 4.0);
    EXPECT_DOUBLE_EQ(shadowing_sigma_db(false), 7.82);
}

TEST(ChannelTest, NoiseFloor)
{
    EXPECT_NEAR(noise_power_dbm(100e6, 3.0), -91.0, 1e-9);
    EXPECT_NEAR(noise_power_dbm(1.0, 0.0), -174.0, 1e-12);
    EXPECT_NEAR(noise_power_dbm(3e6, 3.0), -106.23, 0.01);
    EXPECT_NEAR(noise_power_dbm(RadioConfig{}), -91.0, 1e-9);
}

TEST(ChannelTest, SnrBudget)
{
    EXPECT_NEAR(snr_db(0.2, 0.0, 0.0, 90.7, -91.0), 23.3, 0.02);
    EXPECT_NEAR(snr_db(0.2, 10.0, 10.0, 90.7, -91.0) - snr_db(0.2, 0.0, 0.0, 90.7, -91.0), 20.0, 1e-12);
    EXPECT_NEAR(snr_db(0.2, 0.0, 0.0, 0.0, 0.0), watts_to_dbm(0.2), 1e-12);
    for (double k : {0.5, 2.0, 10.0})
        EXPECT_NEAR(snr_db(0.2 * k, 3.0, 1.0, 100.0, -91.0) - snr_db(0.2, 3.0, 1.0, 100.0, -91.0),
                    10.0 * std::log10(k), 1e-12);
}

TEST(ChannelTest, ShadowDeviateIsStablePerSweep)
{
    EXPECT_EQ(link_shadow_normal(4, 2, 7), link_shadow_normal(4, 2, 7));
    EXPECT_NE(link_shadow_normal(4, 2, 7), link_shadow_normal(4, 2, 8));
    EXPECT_NE(link_shadow_normal(4, 2, 7), link_shadow_normal(4, 3, 7));
}

TEST(ChannelTest, RadioConfigValidation)
{
    RadioConfig r;
    EXPECT_NO_THROW(r.validate());
    r.bandwidth = 1e3;
    EXPECT_THROW(r.validate(), std::invalid_argument);
    r = {};
    r.tx_power = 0.0;
    EXPECT_THROW(r.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace posaid
