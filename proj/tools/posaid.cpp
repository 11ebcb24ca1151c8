// Copyright 2026 The posaid Authors
// SPDX-License-Identifier: Apache-2.0

// posaid: experiment runner.
//
//   posaid position --config fig4_positioning.cfg      phase 1 only
//   posaid simulate --config fig2_rates_1s.cfg         phase 2 from stored estimates
//   posaid full     --config fig5_line_trace.cfg       both phases and the report
//   posaid report   --out out/fig4                     re-aggregate raw CSVs

#include "posaid/experiment.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <string>

namespace {

struct Options {
    std::string config;
    std::string out;
    std::uint64_t seed_offset = 0;
    int jobs = 1;
    std::string log_level = "info";
};

posaid::ExperimentConfig load(const Options& o)
{
    return o.config.empty() ? posaid::parse_config_string("") : posaid::parse_config(o.config);
}

/// --out beats POSAID_OUT_DIR, which beats the config's output.dir.
std::filesystem::path output_dir(const Options& o, const posaid::ExperimentConfig& cfg)
{
    if (!o.out.empty()) return o.out;
    if (const char* env = std::getenv("POSAID_OUT_DIR"); env && *env) return env;
    return cfg.output.dir;
}

posaid::MatrixOptions matrix_options(const Options& o, const posaid::ExperimentConfig& cfg)
{
    posaid::MatrixOptions m;
    m.out = output_dir(o, cfg);
    m.jobs = o.jobs;
    m.seed_offset = o.seed_offset;
    return m;
}

void report_failures(const posaid::PhaseSummary& s, const char* phase)
{
    if (s.failures.empty())
        spdlog::info("{}: {} runs completed", phase, s.runs);
    else
        spdlog::warn("{}: {} of {} runs failed", phase, s.failures.size(), s.runs);
}

void print_aggregate(const posaid::AggregateResult& agg)
{
    for (const auto& f : agg.files) std::cout << "wrote " << f.string() << '\n';
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Positioning-aided mmWave beam management simulator"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config,-c", o.config, "experiment config (INI)")->check(CLI::ExistingFile);
        sub->add_option("--out,-o", o.out, "output directory (overrides POSAID_OUT_DIR and output.dir)");
        sub->add_option("--seed-offset", o.seed_offset, "added to every matrix seed");
        sub->add_option("--jobs,-j", o.jobs, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--log-level", o.log_level, "trace|debug|info|warn|error|off");
    };
    auto* position = app.add_subcommand("position", "run the positioning phase and write estimates");
    auto* simulate = app.add_subcommand("simulate", "run the link phase from stored estimates");
    auto* full = app.add_subcommand("full", "run both phases and aggregate");
    auto* report = app.add_subcommand("report", "re-aggregate the raw CSVs of a run directory");
    for (auto* s : {position, simulate, full, report}) add_common(s);

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(o.log_level));

    try {
        if (report->parsed()) {
            std::filesystem::path dir = o.out;
            if (dir.empty()) dir = output_dir(o, load(o));
            print_aggregate(posaid::aggregate_outputs(dir));
            return 0;
        }
        const auto cfg = load(o);
        const auto mopt = matrix_options(o, cfg);
        posaid::write_run_config(cfg, mopt);
        if (position->parsed()) {
            report_failures(posaid::run_positioning_phase(cfg, mopt), "position");
        } else if (simulate->parsed()) {
            report_failures(posaid::run_link_phase(cfg, mopt), "simulate");
        } else if (full->parsed()) {
            report_failures(posaid::run_positioning_phase(cfg, mopt), "position");
            report_failures(posaid::run_link_phase(cfg, mopt), "simulate");
        }
        print_aggregate(posaid::aggregate_outputs(mopt.out));
        return 0;
    } catch (const posaid::MissingEstimatesError& e) {
        std::cerr << "posaid: " << e.what() << '\n';
        return 3;
    } catch (const posaid::ConfigError& e) {
        std::cerr << "posaid: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "posaid: " << e.what() << '\n';
        return 1;
    }
}
