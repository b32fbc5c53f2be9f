// SPDX-License-Identifier: Apache-2.0
//
// jarve: joint azimuth-range-velocity estimation for OFDM sensing
// Copyright (C) 2026 The jarve authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// jarve command line: sweep, timing, crb, synth.
// Exit codes: 0 success, 2 configuration error, 3 estimator failure rate above threshold.

#include "jarve/bench.hpp"
#include "jarve/scenario_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace
{
    constexpr int kExitConfig = 2;
    constexpr int kExitFailures = 3;

    // "a,b,c" or "lo:step:hi"
    std::vector<double> parse_snr_list(const std::string &s)
    {
        std::vector<double> out;
        if (s.find(':') != std::string::npos)
        {
            std::vector<double> p;
            std::stringstream ss(s);
            for (std::string tok; std::getline(ss, tok, ':');)
                p.push_back(jarve::parse_double(tok));
            if (p.size() != 3 || !(p[1] > 0.0) || p[2] < p[0])
                throw jarve::ConfigError("SNR range must be lo:step:hi with step > 0");
            const auto n = std::size_t(std::floor((p[2] - p[0]) / p[1] + 1e-9)) + 1;
            for (std::size_t i = 0; i < n; ++i)
                out.push_back(p[0] + double(i) * p[1]);
            return out;
        }
        std::stringstream ss(s);
        for (std::string tok; std::getline(ss, tok, ',');)
            out.push_back(jarve::parse_double(tok));
        if (out.empty())
            throw jarve::ConfigError("empty SNR list");
        return out;
    }

    std::vector<jarve::Shape3> parse_dims_list(const std::string &s)
    {
        std::vector<jarve::Shape3> out;
        std::stringstream ss(s);
        for (std::string tok; std::getline(ss, tok, ';');)
        {
            const auto sm = jarve::parse_smoothing(tok, {1, 1, 1});
            out.push_back(sm.sub());
        }
        return out;
    }

    struct Common
    {
        std::string scenario_path;
        std::string smoothing;
        std::string isu = "refined";
        std::string rematch = "verbatim";
        std::size_t q_max = 0;
        double eps1 = 0, eps2 = 0, tau = 0;
    };

    void add_common(CLI::App *app, Common &c)
    {
        app->add_option("--scenario", c.scenario_path, "YAML scenario (default: built-in reference scenario)");
        app->add_option("--smoothing", c.smoothing, "fixed | ratio | La,Nf,Mt");
        app->add_option("--isu", c.isu, "off | verbatim | refined")->check(CLI::IsMember({"off", "verbatim", "refined"}));
        app->add_option("--rematch", c.rematch, "verbatim | normalized")->check(CLI::IsMember({"verbatim", "normalized"}));
        app->add_option("--q-max", c.q_max, "LM iteration cap");
        app->add_option("--eps1", c.eps1, "LM gradient tolerance");
        app->add_option("--eps2", c.eps2, "LM step tolerance");
        app->add_option("--tau", c.tau, "LM initial damping scale");
    }

    jarve::RunSpec make_spec(const Common &c)
    {
        jarve::RunSpec spec;
        if (!c.scenario_path.empty())
        {
            const auto f = jarve::load_scenario(c.scenario_path);
            spec.scenario = f.scenario;
            spec.scenario_path = c.scenario_path;
            if (f.smoothing)
                spec.smoothing = std::to_string(f.smoothing->sub_antennas) + "," + std::to_string(f.smoothing->sub_subcarriers) +
                                 "," + std::to_string(f.smoothing->sub_symbols);
            if (f.lm)
                spec.lm = *f.lm;
        }
        if (!c.smoothing.empty())
            spec.smoothing = c.smoothing;
        if (c.q_max)
            spec.lm.q_max = c.q_max;
        if (c.eps1 > 0)
            spec.lm.eps1 = c.eps1;
        if (c.eps2 > 0)
            spec.lm.eps2 = c.eps2;
        if (c.tau > 0)
            spec.lm.tau = c.tau;
        spec.isu = c.isu == "off" ? jarve::IsuMode::off : (c.isu == "verbatim" ? jarve::IsuMode::verbatim : jarve::IsuMode::refined);
        spec.rematch = c.rematch == "normalized" ? jarve::RematchMode::normalized : jarve::RematchMode::verbatim;
        return spec;
    }

    void print_rows(const std::vector<jarve::RmseRow> &rows)
    {
        std::printf("%-12s %7s %12s %12s %12s %12s %12s %12s %6s %6s\n", "estimator", "snr_db", "rmse_theta", "rmse_r",
                    "rmse_v", "rcrb_theta", "rcrb_r", "rcrb_v", "used", "fail");
        for (const auto &r : rows)
            std::printf("%-12s %7.2f %12.4e %12.4e %12.4e %12.4e %12.4e %12.4e %6zu %6zu\n", r.estimator.c_str(), r.snr_db,
                        r.rmse_theta_deg, r.rmse_range_m, r.rmse_velocity_mps, r.rcrb_theta_deg, r.rcrb_range_m,
                        r.rcrb_velocity_mps, r.trials_used, r.failures);
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Joint azimuth-range-velocity estimation for OFDM sensing"};
    app.require_subcommand(1);

    Common common;
    std::string snr = "-20:5:10", estimators = "pi2dmusic,dft3d", out = ".", dims = "8,88,48;16,128,80";
    std::size_t trials = 200, workers = 1, repeats = 5, dft_pad = 1;
    std::uint64_t seed = 1;
    bool record_time = false, dft_interp = false;
    double max_failure_rate = 0.5, snr_single = 10.0, grid_density = 1.0;

    auto *sweep = app.add_subcommand("sweep", "Monte-Carlo RMSE versus SNR with root-CRB columns");
    add_common(sweep, common);
    sweep->add_option("--snr", snr, "SNR list a,b,c or range lo:step:hi (dB)");
    sweep->add_option("--trials", trials, "trials per SNR")->check(CLI::PositiveNumber);
    sweep->add_option("--seed", seed, "master seed");
    sweep->add_option("--estimators", estimators, "comma list of pi2dmusic, dft3d, grid_oracle");
    sweep->add_option("--out", out, "output directory");
    sweep->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    sweep->add_flag("--time", record_time, "record mean wall time (makes the CSV machine dependent)");
    sweep->add_option("--dft-pad", dft_pad, "3D-DFT zero-padding factor")->check(CLI::PositiveNumber);
    sweep->add_flag("--dft-interp", dft_interp, "parabolic peak interpolation for the 3D-DFT");
    sweep->add_option("--max-failure-rate", max_failure_rate, "exit 3 when any row exceeds this failure fraction");

    auto *timing = app.add_subcommand("timing", "Median wall time per estimator over array sizes");
    add_common(timing, common);
    timing->add_option("--dims", dims, "semicolon list of L,N,M");
    timing->add_option("--estimators", estimators, "comma list of pi2dmusic, dft3d, grid_oracle");
    timing->add_option("--repeats", repeats, "runs per median")->check(CLI::PositiveNumber);
    timing->add_option("--snr", snr_single, "SNR (dB); also sets the oracle grid step");
    timing->add_option("--grid-density", grid_density, "oracle points per axis relative to the matched grid")
        ->check(CLI::PositiveNumber);
    timing->add_option("--seed", seed, "master seed");
    timing->add_option("--out", out, "output directory");

    auto *crb = app.add_subcommand("crb", "Cramer-Rao bounds of the scenario");
    add_common(crb, common);
    crb->add_option("--snr", snr_single, "SNR (dB)");

    std::string synth_out = "observation.bin";
    auto *synth = app.add_subcommand("synth", "Write one noisy observation cube");
    add_common(synth, common);
    synth->add_option("--snr", snr_single, "SNR (dB)");
    synth->add_option("--seed", seed, "seed");
    synth->add_option("--out", synth_out, "output file");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try
    {
        jarve::RunSpec spec = make_spec(common);
        spec.master_seed = seed;
        spec.out_dir = out;
        spec.estimators.clear();
        {
            std::stringstream ss(estimators);
            for (std::string tok; std::getline(ss, tok, ',');)
            {
                const auto e = jarve::parse_estimator(tok);
                if (!e)
                    throw jarve::ConfigError("unknown estimator '" + tok + "'");
                spec.estimators.push_back(*e);
            }
        }

        if (sweep->parsed())
        {
            spec.snr_grid_db = parse_snr_list(snr);
            spec.trials = trials;
            spec.workers = workers;
            spec.record_time = record_time;
            spec.dft.pad_factor = dft_pad;
            spec.dft.interpolate = dft_interp;
            const auto rows = jarve::run_sweep(spec);
            std::filesystem::create_directories(spec.out_dir);
            jarve::emit_csv(rows, spec.out_dir / "rmse.csv");
            jarve::emit_dat(rows, spec.out_dir / "rmse.dat");
            print_rows(rows);
            for (const auto &r : rows)
                if (double(r.failures) > max_failure_rate * double(spec.trials))
                {
                    std::fprintf(stderr, "failure rate above %.3g for %s at %g dB\n", max_failure_rate, r.estimator.c_str(), r.snr_db);
                    return kExitFailures;
                }
            return 0;
        }
        if (timing->parsed())
        {
            jarve::TimingOptions opt;
            opt.repeats = repeats;
            opt.snr_db = snr_single;
            opt.grid_density = grid_density;
            const auto rows = jarve::run_timing(spec, parse_dims_list(dims), opt);
            std::filesystem::create_directories(spec.out_dir);
            const std::string csv = jarve::timing_to_csv(rows);
            jarve::detail::write_text(spec.out_dir / "timing.csv", csv);
            std::fputs(csv.c_str(), stdout);
            return 0;
        }
        if (crb->parsed())
        {
            const auto &sc = spec.scenario;
            const double s2 = jarve::noise_power_for_snr(snr_single);
            const auto th = jarve::crb_theorem1(sc.config, sc.targets, s2);
            const auto cf = jarve::rcrb_single(sc.config, sc.targets, s2);
            std::printf("%-6s %14s %14s %14s %14s %14s %14s\n", "target", "rcrb_theta", "rcrb_r", "rcrb_v", "single_theta",
                        "single_r", "single_v");
            for (std::size_t i = 0; i < sc.targets.size(); ++i)
                std::printf("%-6zu %14.6e %14.6e %14.6e %14.6e %14.6e %14.6e\n", i, th.rcrb[i].theta, th.rcrb[i].range,
                            th.rcrb[i].velocity, cf[i].theta, cf[i].range, cf[i].velocity);
            return 0;
        }
        if (synth->parsed())
        {
            jarve::Scenario sc = jarve::make_scenario(spec.scenario.config, spec.scenario.targets, snr_single);
            jarve::Rng rng(seed);
            if (spec.scenario.random_phases)
                sc.targets = jarve::randomize_phases(sc.targets, rng);
            jarve::write_observation(synth_out, jarve::synthesize(sc, rng()));
            return 0;
        }
    }
    catch (const jarve::ConfigError &e)
    {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    }
    catch (const std::invalid_argument &e)
    {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    }
    catch (const std::exception &e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
