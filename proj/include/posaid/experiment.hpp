// Copyright 2026 The posaid Authors
// SPDX-License-Identifier: Apache-2.0

// Monte Carlo orchestration. Phase 1 writes one estimate stream per
// (class, ISD, mode, seed); phase 2 reads them back and writes one link
// record file per (strategy, class, period, ISD, seed); the report step
// aggregates whatever raw files a run directory holds.

#pragma once

#include "posaid/config.hpp"
#include "posaid/io.hpp"
#include "posaid/metrics.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace posaid {

namespace fs = std::filesystem;

class MissingEstimatesError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MatrixOptions {
    fs::path out = "out";
    int jobs = 1;
    std::uint64_t seed_offset = 0;
};

struct RunFailure {
    std::string phase;
    std::string run;
    std::string error;
};

struct PhaseSummary {
    std::size_t runs = 0;
    std::vector<RunFailure> failures;
};

/// Seeds of the matrix after applying the offset.
inline std::vector<std::uint64_t> matrix_seeds(const ExperimentConfig& cfg, std::uint64_t offset = 0)
{
    std::vector<std::uint64_t> s;
    for (int i = 0; i < cfg.matrix.seeds; ++i) s.push_back(cfg.matrix.seed_base + offset + i);
    return s;
}

/// Everything a run draws from its seed before any strategy is applied.
struct SeedScenario {
    WorldGeometry world;
    std::vector<TrpSite> trps;
    Trajectory trajectory;
};

inline SeedScenario make_scenario(const ExperimentConfig& cfg, DeviceKind kind, double isd,
                                  std::uint64_t seed)
{
    SeedScenario s;
    s.world = cfg.world(isd);
    Rng rng = make_rng(seed, 0, "trps");
    s.trps = deploy_trps(s.world, isd, cfg.scenario.layout, cfg.deployment(), rng);
    s.trajectory = generate_trajectory(s.world, DeviceClass::defaults(kind), cfg.scenario.duration,
                                       cfg.scenario.dt, seed, cfg.mobility());
    return s;
}

inline std::string run_stem(DeviceKind kind, PositioningMode mode, double isd, std::uint64_t seed)
{
    return fmt::format("{}_{}_isd{}_s{}", to_string(kind), to_string(mode), isd, seed);
}

inline std::string link_stem(Strategy s, DeviceKind kind, double period, double isd, std::uint64_t seed)
{
    return fmt::format("{}_{}_T{}_isd{}_s{}", to_string(s), to_string(kind), period, isd, seed);
}

inline fs::path estimate_file(const fs::path& out, DeviceKind k, PositioningMode m, double isd,
                              std::uint64_t seed)
{
    return out / "estimates" / (run_stem(k, m, isd, seed) + ".csv");
}

inline fs::path error_file(const fs::path& out, DeviceKind k, PositioningMode m, double isd,
                           std::uint64_t seed)
{
    return out / "errors" / (run_stem(k, m, isd, seed) + ".csv");
}

inline fs::path link_file(const fs::path& out, Strategy s, DeviceKind k, double period, double isd,
                          std::uint64_t seed)
{
    return out / "links" / (link_stem(s, k, period, isd, seed) + ".csv");
}

namespace detail {

/// Runs task(i) for i in [0, n) on up to `jobs` threads. Returns one message
/// per task, empty on success.
template <class F>
std::vector<std::string> run_pool(std::size_t n, int jobs, F&& task)
{
    std::vector<std::string> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                task(i);
            } catch (const std::exception& e) {
                errors[i] = e.what();
                if (errors[i].empty()) errors[i] = "unknown error";
            }
        }
    };
    const auto n_threads = static_cast<std::size_t>(std::max(1, jobs));
    if (n_threads == 1 || n < 2) {
        worker();
        return errors;
    }
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(n_threads, n); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return errors;
}

inline void write_failures(const fs::path& file, const std::vector<RunFailure>& failures)
{
    auto out = open_for_write(file);
    out << "phase,run,error\n";
    for (const auto& f : failures) {
        std::string msg = f.error;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        out << f.phase << ',' << f.run << ',' << msg << '\n';
    }
}

inline std::vector<PositioningMode> phase1_modes(const ExperimentConfig& cfg)
{
    auto modes = cfg.positioning.modes;
    const bool needed = std::any_of(cfg.matrix.strategies.begin(), cfg.matrix.strategies.end(),
                                    needs_estimates);
    if (needed && std::find(modes.begin(), modes.end(), cfg.positioning.rate_mode) == modes.end())
        modes.push_back(cfg.positioning.rate_mode);
    return modes;
}

}  // namespace detail

/// Saves the effective config (seed offset folded in) next to the outputs.
inline void write_run_config(const ExperimentConfig& cfg, const MatrixOptions& opt)
{
    ExperimentConfig eff = cfg;
    eff.matrix.seed_base += opt.seed_offset;
    eff.output.dir = opt.out.string();
    auto out = detail::open_for_write(opt.out / "config.ini");
    out << serialize_config(eff);
}

inline PhaseSummary run_positioning_phase(const ExperimentConfig& cfg, const MatrixOptions& opt)
{
    cfg.validate();
    struct Job {
        DeviceKind kind;
        double isd;
        PositioningMode mode;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (auto kind : cfg.matrix.classes)
        for (double isd : cfg.matrix.isds)
            for (auto mode : detail::phase1_modes(cfg))
                for (auto seed : matrix_seeds(cfg, opt.seed_offset)) jobs.push_back({kind, isd, mode, seed});

    std::atomic<std::size_t> done{0};
    const auto errors = detail::run_pool(jobs.size(), opt.jobs, [&](std::size_t i) {
        const Job& j = jobs[i];
        const auto sc = make_scenario(cfg, j.kind, j.isd, j.seed);
        const auto res = run_tracking(sc.trajectory, sc.trps, sc.world, j.mode,
                                      cfg.tracking_options(j.kind), j.seed);
        write_estimates_csv(estimate_file(opt.out, j.kind, j.mode, j.isd, j.seed), res.estimates, j.mode);
        write_errors_csv(error_file(opt.out, j.kind, j.mode, j.isd, j.seed), res);
        spdlog::info("[position {}/{}] {}: {} estimates, {} skipped epochs", ++done, jobs.size(),
                     run_stem(j.kind, j.mode, j.isd, j.seed), res.estimates.size(), res.skipped_epochs);
    });

    PhaseSummary s;
    s.runs = jobs.size();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (errors[i].empty()) continue;
        const auto name = run_stem(jobs[i].kind, jobs[i].mode, jobs[i].isd, jobs[i].seed);
        spdlog::error("position run {} failed: {}", name, errors[i]);
        s.failures.push_back({"position", name, errors[i]});
    }
    detail::write_failures(opt.out / "failures_position.csv", s.failures);
    return s;
}

/// Phase 2. Strategies that need estimates read them from the run directory;
/// any missing file aborts before a single run starts.
inline PhaseSummary run_link_phase(const ExperimentConfig& cfg, const MatrixOptions& opt)
{
    cfg.validate();
    const auto seeds = matrix_seeds(cfg, opt.seed_offset);
    if (cfg.matrix.strategies.empty()) {
        detail::write_failures(opt.out / "failures_simulate.csv", {});
        return {};
    }
    const bool need_est = std::any_of(cfg.matrix.strategies.begin(), cfg.matrix.strategies.end(),
                                      needs_estimates);
    const auto mode = cfg.positioning.rate_mode;
    if (need_est) {
        std::vector<fs::path> missing;
        for (auto kind : cfg.matrix.classes)
            for (double isd : cfg.matrix.isds)
                for (auto seed : seeds)
                    if (auto f = estimate_file(opt.out, kind, mode, isd, seed); !fs::exists(f))
                        missing.push_back(f);
        if (!missing.empty())
            throw MissingEstimatesError(fmt::format(
                "{} estimate file(s) missing, first: {} (run the position phase first)",
                missing.size(), missing.front().string()));
    }

    struct Job {
        DeviceKind kind;
        double isd;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (auto kind : cfg.matrix.classes)
        for (double isd : cfg.matrix.isds)
            for (auto seed : seeds) jobs.push_back({kind, isd, seed});

    const Codebooks books = cfg.codebooks();
    std::vector<std::vector<RunFailure>> per_job(jobs.size());
    std::atomic<std::size_t> done{0};
    const auto errors = detail::run_pool(jobs.size(), opt.jobs, [&](std::size_t i) {
        const Job& j = jobs[i];
        const auto sc = make_scenario(cfg, j.kind, j.isd, j.seed);
        std::vector<PositionEstimate> est;
        if (need_est) est = read_estimates_csv(estimate_file(opt.out, j.kind, mode, j.isd, j.seed));
        for (double period : cfg.matrix.periods) {
            for (auto strategy : cfg.matrix.strategies) {
                const auto name = link_stem(strategy, j.kind, period, j.isd, j.seed);
                try {
                    const auto recs = simulate_run(cfg.run_config(strategy, period, j.isd, j.seed), sc.world,
                                                   sc.trps, books, sc.trajectory, est);
                    write_links_csv(link_file(opt.out, strategy, j.kind, period, j.isd, j.seed), recs);
                    spdlog::info("[simulate {}/{}] {}: mean {:.1f} Mbit/s", ++done,
                                 jobs.size() * cfg.matrix.periods.size() * cfg.matrix.strategies.size(),
                                 name, mean_rate(recs) / 1e6);
                } catch (const std::exception& e) {
                    spdlog::error("simulate run {} failed: {}", name, e.what());
                    per_job[i].push_back({"simulate", name, e.what()});
                }
            }
        }
    });

    PhaseSummary s;
    s.runs = jobs.size() * cfg.matrix.periods.size() * cfg.matrix.strategies.size();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        for (auto& f : per_job[i]) s.failures.push_back(std::move(f));
        if (!errors[i].empty()) {
            const auto name = fmt::format("{}_isd{}_s{}", to_string(jobs[i].kind), jobs[i].isd, jobs[i].seed);
            spdlog::error("simulate scenario {} failed: {}", name, errors[i]);
            s.failures.push_back({"simulate", name, errors[i]});
        }
    }
    detail::write_failures(opt.out / "failures_simulate.csv", s.failures);
    return s;
}

struct PositioningRow {
    PositioningMode mode = PositioningMode::doa_toa;
    double isd = 0.0;
    std::size_t samples = 0;
    double median = 0.0;
    double p85 = 0.0;
    double below_1m = 0.0;
    double below_half_m = 0.0;
};

struct RateRow {
    Strategy strategy = Strategy::baseline;
    DeviceKind device = DeviceKind::drone;
    double period = 0.0;
    double isd = 0.0;
    RateSummary summary;
};

struct AggregateResult {
    std::vector<PositioningRow> positioning;
    std::vector<RateRow> rates;
    std::vector<fs::path> files;  // aggregate files written
};

/// Rebuilds every aggregate file of a run directory from its raw CSVs, using
/// the run's saved config.ini to enumerate the matrix.
inline AggregateResult aggregate_outputs(const fs::path& dir)
{
    if (!fs::is_directory(dir)) throw std::runtime_error("report: " + dir.string() + " is not a directory");
    if (!fs::exists(dir / "config.ini"))
        throw std::runtime_error("report: no config.ini in " + dir.string() + ", nothing to aggregate");
    const ExperimentConfig cfg = parse_config(dir / "config.ini");
    const auto seeds = matrix_seeds(cfg);
    AggregateResult agg;

    for (auto mode : cfg.positioning.modes) {
        for (double isd : cfg.matrix.isds) {
            std::vector<double> errors;
            for (auto kind : cfg.matrix.classes)
                for (auto seed : seeds) {
                    const auto f = error_file(dir, kind, mode, isd, seed);
                    if (!fs::exists(f)) continue;
                    for (const auto& e : read_errors_csv(f))
                        if (e.t >= cfg.positioning.warmup - 1e-9) errors.push_back(e.error);
                }
            if (errors.empty()) continue;
            const ErrorCdf cdf(std::move(errors));
            const auto file = dir / fmt::format("pos_cdf_{}_{}.csv", to_string(mode), isd);
            auto out = detail::open_for_write(file);
            out << "error_m,cdf\n";
            const auto& s = cdf.samples();
            for (std::size_t i = 0; i < s.size(); ++i)
                out << fmt::format("{},{}\n", s[i], static_cast<double>(i + 1) / static_cast<double>(s.size()));
            agg.files.push_back(file);
            agg.positioning.push_back({mode, isd, cdf.size(), cdf.median(), cdf.quantile(0.85),
                                       cdf.fraction_below(1.0), cdf.fraction_below(0.5)});
        }
    }

    for (double period : cfg.matrix.periods) {
        std::vector<RateRow> rows;
        for (double isd : cfg.matrix.isds)
            for (auto kind : cfg.matrix.classes)
                for (auto strategy : cfg.matrix.strategies) {
                    std::vector<std::vector<LinkRecord>> runs;
                    for (auto seed : seeds) {
                        const auto f = link_file(dir, strategy, kind, period, isd, seed);
                        if (fs::exists(f)) runs.push_back(read_links_csv(f));
                    }
                    if (runs.empty()) continue;
                    rows.push_back({strategy, kind, period, isd,
                                    summarize_rates(runs, cfg.radio.radio.bandwidth, kind, period)});
                }
        if (rows.empty()) continue;
        const auto file = dir / fmt::format("rates_{}.csv", period);
        auto out = detail::open_for_write(file);
        out << "strategy,class,mean_mbps,se,isd_m,seeds\n";
        for (const auto& r : rows)
            out << fmt::format("{},{},{},{},{},{}\n", to_string(r.strategy), to_string(r.device),
                               r.summary.mean_rate / 1e6, r.summary.std_error / 1e6, r.isd, r.summary.seeds);
        agg.files.push_back(file);
        agg.rates.insert(agg.rates.end(), rows.begin(), rows.end());
    }

    if (cfg.scenario.layout == TrpLayout::line && cfg.output.trace && !cfg.matrix.classes.empty()) {
        for (auto strategy : cfg.matrix.strategies) {
            const auto f = link_file(dir, strategy, cfg.matrix.classes.front(), cfg.matrix.periods.front(),
                                     cfg.matrix.isds.front(), seeds.front());
            if (!fs::exists(f)) continue;
            const auto file = dir / fmt::format("trace_line_{}.csv", to_string(strategy));
            auto out = detail::open_for_write(file);
            out << "t,snr_db,rate_mbps\n";
            for (const auto& r : read_links_csv(f))
                out << fmt::format("{},{},{}\n", r.t, r.snr_db, r.rate_bps / 1e6);
            agg.files.push_back(file);
        }
    }

    if (agg.positioning.empty() && agg.rates.empty())
        throw std::runtime_error("report: no raw result files under " + dir.string());

    nlohmann::json j;
    for (const auto& p : agg.positioning)
        j["positioning"].push_back({{"mode", to_string(p.mode)},
                                    {"isd_m", p.isd},
                                    {"samples", p.samples},
                                    {"median_m", p.median},
                                    {"p85_m", p.p85},
                                    {"fraction_below_1m", p.below_1m},
                                    {"fraction_below_0_5m", p.below_half_m}});
    for (const auto& r : agg.rates)
        j["rates"].push_back({{"strategy", to_string(r.strategy)},
                              {"class", to_string(r.device)},
                              {"period_s", r.period},
                              {"isd_m", r.isd},
                              {"mean_mbps", r.summary.mean_rate / 1e6},
                              {"se_mbps", r.summary.std_error / 1e6},
                              {"spectral_efficiency", r.summary.mean_spectral_efficiency},
                              {"seeds", r.summary.seeds}});
    for (double period : cfg.matrix.periods)
        j["sweep_overhead"].push_back(
            {{"period_s", period}, {"fraction", sweep_overhead_fraction(cfg.schedule(period))}});
    if (std::find(cfg.matrix.strategies.begin(), cfg.matrix.strategies.end(), Strategy::reference) !=
        cfg.matrix.strategies.end())
        j["notes"].push_back("reference: TRP-side position-aided refresh with the device beam held "
                             "from the last sweep");
    j["failures"] = nlohmann::json::array();
    for (const char* phase : {"position", "simulate"}) {
        const auto f = dir / fmt::format("failures_{}.csv", phase);
        if (!fs::exists(f)) continue;
        for (const auto& row : detail::read_csv(f, "phase,run,error"))
            j["failures"].push_back({{"phase", row[0]}, {"run", row[1]}, {"error", row[2]}});
    }
    auto out = detail::open_for_write(dir / "summary.json");
    out << j.dump(2) << '\n';
    agg.files.push_back(dir / "summary.json");
    return agg;
}

struct MatrixResult {
    PhaseSummary position;
    PhaseSummary simulate;
    AggregateResult aggregate;
};

/// Both phases followed by the report step.
inline MatrixResult run_experiment_matrix(const ExperimentConfig& cfg, const MatrixOptions& opt)
{
    write_run_config(cfg, opt);
    MatrixResult r;
    r.position = run_positioning_phase(cfg, opt);
    r.simulate = run_link_phase(cfg, opt);
    r.aggregate = aggregate_outputs(opt.out);
    return r;
}

}  // namespace posaid
