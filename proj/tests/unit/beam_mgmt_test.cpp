// Copyright 2026 The posaid Authors
// SPDX-License-Identifier: Apache-2.0

#include "posaid/beam_mgmt.hpp"

#include "support/generators.hpp"

#include <gtest/gtest.h>

namespace posaid {
namespace {

WorldGeometry empty_world()
{
    WorldGeometry w;
    w.street_width = 21.0;
    w.bounds = {-300.0, -300.0, 300.0, 300.0};
    w.nodes = {{-250.0, 0.0}, {250.0, 0.0}};
    w.streets = {{0, 1}};
    return w;
}

RadioConfig no_shadowing()
{
    RadioConfig r;
    r.shadowing = false;
    return r;
}

TEST(OverheadTest, SweepAirtimeFraction)
{
    EXPECT_DOUBLE_EQ(sweep_overhead_fraction({1.0, 0.125e-3, 128}), 128 * 0.125e-3 / 1.0);
    EXPECT_NEAR(sweep_overhead_fraction({1.0, 0.125e-3, 128}), 0.016, 1e-15);
    EXPECT_NEAR(sweep_overhead_fraction({5.0, 0.125e-3, 128}), 0.0032, 1e-15);
    EXPECT_EQ(Codebooks{}.combos(), 128);
    EXPECT_DOUBLE_EQ(SweepSchedule{}.duration(), 0.016);
    EXPECT_THROW(sweep_overhead_fraction({0.016, 0.125e-3, 128}), std::invalid_argument);
    EXPECT_THROW(sweep_overhead_fraction({0.01, 0.125e-3, 128}), std::invalid_argument);
}

TEST(SweepTest, BoresightAlignedPair)
{
    const auto w = empty_world();
    const std::vector<TrpSite> trps{{0, {0.0, 0.0, 7.0}, 0.0, 0.0}};
    const Codebooks books;
    const LinkBudget budget(w, trps, books, no_shadowing(), 1);
    // Beam 12 points at +7.5 degrees azimuth, 0 elevation.
    const double az = books.trp.beams[12].azimuth;
    const Vec3 dev{30.0 * std::cos(az), 30.0 * std::sin(az), 7.0};
    const Vec3 heading = (trps[0].position - dev).normalized();
    const auto sw = exhaustive_sweep(dev, heading, budget, 100.0, 0, 0.0);
    EXPECT_EQ(sw.assignment.trp_id, 0);
    EXPECT_EQ(sw.assignment.trp_beam, 12u);
    EXPECT_EQ(sw.assignment.device_beam, 0u);
}

TEST(SweepTest, NearerTrpWins)
{
    const auto w = empty_world();
    const std::vector<TrpSite> trps{{0, {60.0, 0.0, 7.0}, 0.0, kPi}, {1, {-30.0, 0.0, 7.0}, 0.0, 0.0}};
    const Codebooks books;
    const LinkBudget budget(w, trps, books, no_shadowing(), 1);
    const auto sw = exhaustive_sweep({0.0, 0.0, 1.5}, Vec3::UnitY(), budget, 100.0, 0, 0.0);
    EXPECT_EQ(sw.assignment.trp_id, 1);
}

TEST(SweepTest, SymmetricTieGoesToLowerId)
{
    const auto w = empty_world();
    const std::vector<TrpSite> trps{{0, {20.0, 0.0, 7.0}, 0.0, kPi}, {1, {-20.0, 0.0, 7.0}, 0.0, 0.0}};
    const Codebooks books;
    const LinkBudget budget(w, trps, books, no_shadowing(), 1);
    const auto sw = exhaustive_sweep({0.0, 0.0, 1.5}, Vec3::UnitY(), budget, 100.0, 0, 0.0);
    EXPECT_EQ(sw.assignment.trp_id, 0);
}

TEST(SweepTest, NothingInRangeIsOutage)
{
    const auto w = empty_world();
    const std::vector<TrpSite> trps{{0, {200.0, 0.0, 7.0}, 0.0, kPi}};
    const Codebooks books;
    const LinkBudget budget(w, trps, books, {}, 1);
    const auto sw = exhaustive_sweep({0.0, 0.0, 1.5}, Vec3::UnitX(), budget, 100.0, 0, 2.0);
    EXPECT_TRUE(sw.assignment.outage());
    EXPECT_DOUBLE_EQ(sw.assignment.assigned_at, 2.0);
    EXPECT_TRUE(std::isinf(sw.snr_db));
}

/// Independent recomputation of the best (trp, trp_beam, device_beam) triple.
struct Brute {
    int trp = -1;
    std::size_t i = 0, j = 0;
    double snr = -1e300;
};

Brute brute_force(const WorldGeometry& w, const std::vector<TrpSite>& trps, const Codebooks& books,
                  const RadioConfig& radio, std::uint64_t seed, std::uint64_t sweep, const Vec3& dev,
                  const Vec3& heading, double radius)
{
    Brute b;
    const double heading_az = std::atan2(heading.y(), heading.x());
    for (const auto& t : trps) {
        if ((t.position - dev).norm() > radius) continue;
        const auto g = link_geometry(w, t.position, dev);
        const double pl = umi_path_loss_db(g.d2d, g.d3d, radio.carrier_frequency, g.trp_height,
                                           g.device_height, g.los) +
                          (radio.shadowing ? shadowing_sigma_db(g.los) * link_shadow_normal(seed, t.id, sweep) : 0.0);
        const double base = 10.0 * std::log10(radio.tx_power * 1e3) - pl -
                            (-174.0 + 10.0 * std::log10(radio.bandwidth) + radio.noise_figure);
        const Direction at_trp{wrap_angle(g.azimuth_at_trp - t.boresight_azimuth), g.elevation_at_trp};
        const Direction at_dev{wrap_angle(g.azimuth_at_device - heading_az), g.elevation_at_device};
        for (std::size_t i = 0; i < books.trp.size(); ++i)
            for (std::size_t j = 0; j < books.device.size(); ++j) {
                const double s = base + books.trp.gain_dbi(i, at_trp) + books.device.gain_dbi(j, at_dev);
                if (s > b.snr + 1e-9) b = {t.id, i, j, s};
            }
    }
    return b;
}

TEST(SweepProperty, MatchesBruteForce)
{
    const auto w = build_manhattan_grid({});
    const Codebooks books;
    const RadioConfig radio;
    testgen::Gen g(31);
    for (int c = 0; c < 60; ++c) {
        SCOPED_TRACE("case " + std::to_string(c));
        const double isd = g.coin() ? 25.0 : 50.0;
        Rng rng = make_rng(static_cast<std::uint64_t>(c), 0, "trps");
        const auto trps = deploy_trps(w, isd, TrpLayout::street_furniture_grid, {}, rng);
        const auto seed = static_cast<std::uint64_t>(g.integer(1, 1000));
        const auto sweep = static_cast<std::uint64_t>(g.integer(0, 50));
        const LinkBudget budget(w, trps, books, radio, seed);
        const Vec3 dev = g.street_point(w, g.uniform(1.2, 5.0));
        const Vec3 heading = Vec3{g.normal(), g.normal(), 0.0}.normalized();
        const auto sw = exhaustive_sweep(dev, heading, budget, 2.0 * isd, sweep, 0.0);
        const auto b = brute_force(w, trps, books, radio, seed, sweep, dev, heading, 2.0 * isd);
        ASSERT_FALSE(sw.assignment.outage());
        EXPECT_EQ(sw.assignment.trp_id, b.trp);
        EXPECT_EQ(sw.assignment.trp_beam, b.i);
        EXPECT_EQ(sw.assignment.device_beam, b.j);
        EXPECT_NEAR(sw.snr_db, b.snr, 1e-9);
        const auto e = budget.snr(budget.trp(b.trp), b.i, b.j, dev, heading, sweep);
        EXPECT_NEAR(e.snr_db, sw.snr_db, 1e-9);
    }
}

TEST(PositionAidedTest, TruthGivesHypotheticalBeams)
{
    const Codebooks books;
    const TrpSite trp{3, {0.0, 0.0, 7.0}, 0.0, kPi / 2};
    testgen::Gen g(2);
    for (int c = 0; c < 200; ++c) {
        const Vec3 p = g.point_in_box({-60, 2, 1}, {60, 60, 5});
        const Vec3 h = Vec3{g.normal(), g.normal(), 0.0}.normalized();
        const auto a = position_aided_assignment(p, trp, books, h, 0, 1.0);
        const auto b = hypothetical_assignment(p, h, trp, books, 1.0);
        EXPECT_EQ(a.trp_id, 3);
        EXPECT_EQ(a.trp_beam, b.trp_beam);
        EXPECT_EQ(a.device_beam, b.device_beam);
        EXPECT_EQ(a.strategy, Strategy::proposed);
        EXPECT_EQ(b.strategy, Strategy::hypothetical);
    }
}

TEST(PositionAidedTest, HalfMetreErrorKeepsTheBeam)
{
    const Codebooks books;
    const TrpSite trp{0, {0.0, 0.0, 7.0}, 0.0, 0.0};
    for (std::size_t k = 8; k < 16; ++k) {
        const double az = books.trp.beams[k].azimuth;
        const Vec3 truth{20.0 * std::cos(az), 20.0 * std::sin(az), 7.0};
        const Vec3 across{-std::sin(az), std::cos(az), 0.0};
        // 0.5 m at 20 m is about 1.4 degrees, well inside a 15 degree beam.
        EXPECT_NEAR(rad_to_deg(std::atan(0.5 / 20.0)), 1.43, 0.01);
        for (double s : {-0.5, 0.5}) {
            const auto a = position_aided_assignment(truth + s * across, trp, books, std::nullopt, 0, 0.0);
            EXPECT_EQ(a.trp_beam, k);
        }
    }
}

TEST(PositionAidedTest, AdjacentSectorShiftsIndexByOne)
{
    const Codebooks books;
    const TrpSite trp{0, {0.0, 0.0, 7.0}, 0.0, 0.0};
    for (std::size_t k = 8; k + 1 < 16; ++k) {
        const double az = books.trp.beams[k + 1].azimuth;
        const Vec3 moved{20.0 * std::cos(az), 20.0 * std::sin(az), 7.0};
        const double az0 = books.trp.beams[k].azimuth;
        const Vec3 start{20.0 * std::cos(az0), 20.0 * std::sin(az0), 7.0};
        const auto a = position_aided_assignment(start, trp, books, std::nullopt, 0, 0.0);
        const auto b = position_aided_assignment(moved, trp, books, std::nullopt, 0, 0.0);
        EXPECT_EQ(b.trp_beam, a.trp_beam + 1);
    }
}

TEST(PositionAidedTest, NoHeadingKeepsFallbackDeviceBeam)
{
    const Codebooks books;
    const TrpSite trp{0, {0.0, 0.0, 7.0}, 0.0, 0.0};
    const auto a = position_aided_assignment({20, 3, 1.5}, trp, books, std::nullopt, 5, 0.0);
    EXPECT_EQ(a.device_beam, 5u);
}

TEST(ReferenceTest, UnchangedHeadingMatchesProposed)
{
    const auto w = empty_world();
    const std::vector<TrpSite> trps{{0, {0.0, 0.0, 7.0}, 0.0, kPi / 2}};
    const Codebooks books;
    const LinkBudget budget(w, trps, books, no_shadowing(), 1);
    testgen::Gen g(3);
    for (int c = 0; c < 100; ++c) {
        const Vec3 p = g.point_in_box({-40, 5, 1.5}, {40, 40, 1.5});
        const Vec3 h = Vec3{g.normal(), g.normal(), 0.0}.normalized();
        const auto sw = exhaustive_sweep(p, h, budget, 100.0, 0, 0.0);
        const auto prop = position_aided_assignment(p, trps[0], books, h, sw.assignment.device_beam, 0.1);
        const auto ref = reference_assignment(p, trps[0], books, sw.assignment.device_beam, 0.1);
        EXPECT_EQ(ref.trp_beam, prop.trp_beam);
        EXPECT_EQ(ref.device_beam, prop.device_beam);
        EXPECT_EQ(ref.strategy, Strategy::reference);
    }
}

TEST(ReferenceTest, TurnedDeviceLosesGain)
{
    const auto w = empty_world();
    const std::vector<TrpSite> trps{{0, {0.0, 0.0, 7.0}, 0.0, kPi / 2}};
    const Codebooks books;
    const LinkBudget budget(w, trps, books, no_shadowing(), 1);
    const Vec3 p{5.0, 25.0, 1.5};
    const Vec3 h0 = Vec3::UnitX();
    const Vec3 h1 = Vec3::UnitY();  // turned 90 degrees
    const auto sw = exhaustive_sweep(p, h0, budget, 100.0, 0, 0.0);
    const auto prop = position_aided_assignment(p, trps[0], books, h1, sw.assignment.device_beam, 1.0);
    const auto ref = reference_assignment(p, trps[0], books, sw.assignment.device_beam, 1.0);
    const double g_prop = budget.snr(trps[0], prop.trp_beam, prop.device_beam, p, h1, 0).snr_db;
    const double g_ref = budget.snr(trps[0], ref.trp_beam, ref.device_beam, p, h1, 0).snr_db;
    EXPECT_LT(g_ref, g_prop - 3.0);
}

TEST(HeadingTest, ConfidenceGate)
{
    EXPECT_FALSE(heading_from_velocity({0.1, 0.0, 0.0}));
    auto h = heading_from_velocity({3.0, 4.0, 9.0});
    ASSERT_TRUE(h);
    EXPECT_NEAR((*h - Vec3{0.6, 0.8, 0.0}).norm(), 0.0, 1e-15);
    // 1 m/s with a 0.3 m/s std is only 3.3 sigma.
    EXPECT_FALSE(heading_from_velocity({1.0, 0.0, 0.0}, 0.09, 5.0));
    EXPECT_TRUE(heading_from_velocity({2.0, 0.0, 0.0}, 0.09, 5.0));
    EXPECT_TRUE(heading_from_velocity({1.0, 0.0, 0.0}, 0.09, 0.0));
}

TEST(StrategyTest, NamesRoundTrip)
{
    for (auto s : {Strategy::baseline, Strategy::proposed, Strategy::reference, Strategy::hypothetical})
        EXPECT_EQ(parse_strategy(to_string(s)), s);
    EXPECT_THROW(parse_strategy("oracle"), std::invalid_argument);
    EXPECT_TRUE(needs_estimates(Strategy::proposed));
    EXPECT_TRUE(needs_estimates(Strategy::reference));
    EXPECT_FALSE(needs_estimates(Strategy::baseline));
    EXPECT_FALSE(needs_estimates(Strategy::hypothetical));
}

}  // namespace
}  // namespace posaid
