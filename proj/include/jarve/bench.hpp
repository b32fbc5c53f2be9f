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

#ifndef JARVE_BENCH_HPP
#define JARVE_BENCH_HPP

// Monte-Carlo RMSE sweeps, timing tables and their CSV / gnuplot output

#include "jarve/crb.hpp"
#include "jarve/pipeline.hpp"
#include "jarve/random.hpp"

#include <atomic>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <thread>

namespace jarve
{
    enum class Estimator
    {
        pi2dmusic,
        dft3d,
        grid_oracle
    };

    inline std::string_view to_string(Estimator e)
    {
        switch (e)
        {
        case Estimator::pi2dmusic:
            return "pi2dmusic";
        case Estimator::dft3d:
            return "dft3d";
        case Estimator::grid_oracle:
            return "grid_oracle";
        }
        return "?";
    }

    inline std::optional<Estimator> parse_estimator(std::string_view s)
    {
        for (Estimator e : {Estimator::pi2dmusic, Estimator::dft3d, Estimator::grid_oracle})
            if (s == to_string(e))
                return e;
        return std::nullopt;
    }

    // Oracle grid: union of +-half_cells steps around each true target, step a fraction of the Rayleigh cell
    struct OracleGridSettings
    {
        double step_fraction = 0.01;
        std::size_t half_cells = 20;
    };

    struct RunSpec
    {
        Scenario scenario = reference_scenario();
        std::string scenario_path;
        std::vector<Estimator> estimators{Estimator::pi2dmusic};
        std::vector<double> snr_grid_db{10.0};
        std::size_t trials = 200;
        std::uint64_t master_seed = 1;
        std::string smoothing = "fixed"; // fixed | ratio | La,Nf,Mt, resolved against the scenario dims
        LmSettings lm;
        IsuMode isu = IsuMode::refined;
        RematchMode rematch = RematchMode::verbatim;
        DftSettings dft;
        OracleGridSettings oracle;
        std::size_t workers = 1;
        bool record_time = false; // off keeps the CSV byte-reproducible
        std::filesystem::path out_dir = ".";

        SmoothingConfig smoothing_for(const Shape3 &shape) const { return parse_smoothing(smoothing, shape); }

        void check() const
        {
            if (trials < 1)
                throw ConfigError("trials must be >= 1");
            if (snr_grid_db.empty())
                throw ConfigError("SNR grid is empty");
            if (!std::is_sorted(snr_grid_db.begin(), snr_grid_db.end()))
                throw ConfigError("SNR grid must be sorted ascending");
            if (estimators.empty())
                throw ConfigError("no estimators selected");
            if (workers < 1)
                throw ConfigError("workers must be >= 1");
            if (scenario.targets.empty())
                throw ConfigError("scenario has no targets");
            lm.check();
            const auto sm = smoothing_for(scenario.config.shape());
            require_valid(scenario, sm);
        }
    };

    struct RmseRow
    {
        std::string estimator;
        double snr_db = 0.0;
        double rmse_theta_deg = 0.0;
        double rmse_range_m = 0.0;
        double rmse_velocity_mps = 0.0;
        double rcrb_theta_deg = 0.0;
        double rcrb_range_m = 0.0;
        double rcrb_velocity_mps = 0.0;
        double mean_wall_time_s = std::numeric_limits<double>::quiet_NaN();
        std::size_t trials_used = 0;
        std::size_t failures = 0;

        bool operator==(const RmseRow &o) const
        {
            auto same = [](double a, double b)
            { return a == b || (std::isnan(a) && std::isnan(b)); };
            return estimator == o.estimator && same(snr_db, o.snr_db) && same(rmse_theta_deg, o.rmse_theta_deg) &&
                   same(rmse_range_m, o.rmse_range_m) && same(rmse_velocity_mps, o.rmse_velocity_mps) &&
                   same(rcrb_theta_deg, o.rcrb_theta_deg) && same(rcrb_range_m, o.rcrb_range_m) &&
                   same(rcrb_velocity_mps, o.rcrb_velocity_mps) && same(mean_wall_time_s, o.mean_wall_time_s) &&
                   trials_used == o.trials_used && failures == o.failures;
        }
    };

    // Squared errors of one estimate set under the assignment minimizing the Rayleigh-normalized total
    inline std::array<double, 3> association_errors(const std::vector<Target> &truth, const std::vector<Triplet> &est,
                                                    const std::array<double, 3> &scales)
    {
        const std::size_t U = truth.size();
        if (est.size() != U)
            throw EstimationError("estimate count differs from target count");
        RMat cost(static_cast<Eigen::Index>(U), static_cast<Eigen::Index>(U));
        for (std::size_t i = 0; i < U; ++i)
            for (std::size_t j = 0; j < U; ++j)
            {
                double s = 0.0;
                for (Dim d : kAllDims)
                    s += std::pow((target_param(truth[i], d) - est[j][d]) / scales[index(d)], 2);
                cost(Eigen::Index(i), Eigen::Index(j)) = s;
            }
        const auto perm = detail::best_assignment(cost);
        std::array<double, 3> se{};
        for (std::size_t i = 0; i < U; ++i)
            for (Dim d : kAllDims)
                se[index(d)] += std::pow(target_param(truth[i], d) - est[perm[i]][d], 2);
        return se;
    }

    // Trial (snr index, trial index) scenario: phases and noise drawn from one derived seed
    inline Scenario trial_scenario(const RunSpec &spec, std::size_t snr_index, std::size_t trial, std::uint64_t &noise_seed)
    {
        Rng rng(derive_seed(spec.master_seed, {std::uint64_t(snr_index), std::uint64_t(trial)}));
        Scenario sc = make_scenario(spec.scenario.config, spec.scenario.targets, spec.snr_grid_db[snr_index]);
        sc.random_phases = spec.scenario.random_phases;
        if (sc.random_phases)
            sc.targets = randomize_phases(sc.targets, rng);
        noise_seed = rng();
        return sc;
    }

    inline GridSpec oracle_grid(const SystemConfig &c, const std::vector<Target> &truth, const OracleGridSettings &og)
    {
        const auto cells = rayleigh_scales(c);
        std::vector<Triplet> centers;
        for (const auto &t : truth)
            centers.push_back({t.azimuth_deg, t.range_m, t.velocity_mps});
        return local_grid(centers, {cells[0] * og.step_fraction, cells[1] * og.step_fraction, cells[2] * og.step_fraction},
                          og.half_cells);
    }

    // One estimator on one observation
    inline std::vector<Triplet> run_estimator(Estimator e, const RunSpec &spec, const Scenario &sc, const Observation &obs)
    {
        const std::size_t U = sc.targets.size();
        const SmoothingConfig sm = spec.smoothing_for(sc.config.shape());
        switch (e)
        {
        case Estimator::pi2dmusic:
        {
            PipelineSettings ps;
            ps.smoothing = sm;
            ps.lm = spec.lm;
            ps.isu.mode = spec.isu;
            ps.rematch = spec.rematch;
            return run_pi2dmusic(obs, U, ps).estimates;
        }
        case Estimator::dft3d:
            return estimate_3d_dft(obs, U, spec.dft).estimates;
        case Estimator::grid_oracle:
            return grid_music_oracle(obs, U, oracle_grid(sc.config, sc.targets, spec.oracle), sm).set.estimates;
        }
        return {};
    }

    namespace detail
    {
        struct TrialOutcome
        {
            bool ok = false;
            std::array<double, 3> se{};
            double seconds = 0.0;
        };

        // Runs f(0..n-1) on a bounded pool; each index written by exactly one worker
        template <class F>
        void parallel_for(std::size_t n, std::size_t workers, F &&f)
        {
            workers = std::max<std::size_t>(1, std::min(workers, n));
            if (workers == 1)
            {
                for (std::size_t i = 0; i < n; ++i)
                    f(i);
                return;
            }
            std::atomic<std::size_t> next{0};
            std::vector<std::thread> pool;
            std::exception_ptr err;
            std::mutex err_mu;
            for (std::size_t w = 0; w < workers; ++w)
                pool.emplace_back([&]
                                  {
                    for (std::size_t i = next++; i < n; i = next++)
                        try
                        {
                            f(i);
                        }
                        catch (...)
                        {
                            std::lock_guard<std::mutex> lk(err_mu);
                            if (!err)
                                err = std::current_exception();
                        } });
            for (auto &t : pool)
                t.join();
            if (err)
                std::rethrow_exception(err);
        }
    }

    // Rows ordered by estimator (as listed) then SNR
    inline std::vector<RmseRow> run_sweep(const RunSpec &spec)
    {
        using clk = std::chrono::steady_clock;
        spec.check();
        const std::size_t S = spec.snr_grid_db.size(), W = spec.trials, E = spec.estimators.size();
        const std::size_t U = spec.scenario.targets.size();
        const auto scales = rayleigh_scales(spec.scenario.config);
        std::vector<detail::TrialOutcome> out(S * W * E);

        detail::parallel_for(S * W, spec.workers, [&](std::size_t job)
                             {
            const std::size_t s = job / W, w = job % W;
            std::uint64_t noise_seed = 0;
            const Scenario sc = trial_scenario(spec, s, w, noise_seed);
            const Observation obs = synthesize(sc, noise_seed);
            for (std::size_t e = 0; e < E; ++e)
            {
                auto &o = out[(e * S + s) * W + w];
                try
                {
                    const auto t0 = clk::now();
                    const auto est = run_estimator(spec.estimators[e], spec, sc, obs);
                    o.seconds = std::chrono::duration<double>(clk::now() - t0).count();
                    o.se = association_errors(sc.targets, est, scales);
                    o.ok = std::all_of(o.se.begin(), o.se.end(), [](double x) { return std::isfinite(x); });
                }
                catch (const std::exception &)
                {
                    o.ok = false;
                }
            } });

        std::vector<RmseRow> rows;
        for (std::size_t e = 0; e < E; ++e)
            for (std::size_t s = 0; s < S; ++s)
            {
                RmseRow r;
                r.estimator = std::string(to_string(spec.estimators[e]));
                r.snr_db = spec.snr_grid_db[s];
                std::array<double, 3> se{};
                double secs = 0.0;
                for (std::size_t w = 0; w < W; ++w)
                {
                    const auto &o = out[(e * S + s) * W + w];
                    if (!o.ok)
                    {
                        ++r.failures;
                        continue;
                    }
                    ++r.trials_used;
                    for (std::size_t k = 0; k < 3; ++k)
                        se[k] += o.se[k];
                    secs += o.seconds;
                }
                const double n = double(r.trials_used * U);
                const double nan = std::numeric_limits<double>::quiet_NaN();
                r.rmse_theta_deg = n > 0 ? std::sqrt(se[0] / n) : nan;
                r.rmse_range_m = n > 0 ? std::sqrt(se[1] / n) : nan;
                r.rmse_velocity_mps = n > 0 ? std::sqrt(se[2] / n) : nan;
                const double s2 = noise_power_for_snr(r.snr_db);
                if (s2 > 0.0)
                {
                    const CrbEntry rc = rms_rcrb(rcrb_single(spec.scenario.config, spec.scenario.targets, s2));
                    r.rcrb_theta_deg = rc.theta;
                    r.rcrb_range_m = rc.range;
                    r.rcrb_velocity_mps = rc.velocity;
                }
                if (spec.record_time && r.trials_used > 0)
                    r.mean_wall_time_s = secs / double(r.trials_used);
                rows.push_back(r);
            }
        return rows;
    }

    // ---------------------------------------------------------------- timing

    struct TimingRow
    {
        Shape3 dims{};
        std::string estimator;
        double median_s = std::numeric_limits<double>::quiet_NaN();
        double ratio_to_pi = std::numeric_limits<double>::quiet_NaN(); // this time / pi2dmusic time
        std::size_t grid_points = 0;
        bool projected = false; // oracle search time extrapolated from a measured grid chunk
        std::string skipped;    // reason when the row could not be measured
    };

    struct TimingOptions
    {
        std::size_t repeats = 5;
        double snr_db = 10.0;
        std::size_t memory_budget_bytes = std::size_t(3) << 30;
        std::size_t chunk_points = 200'000; // oracle grid points actually searched per measurement
        double grid_density = 1.0;          // oracle points per axis relative to the matched grid
    };

    // Grid for matched accuracy: step RCRB/4 per dim over +-1 Rayleigh cell around each target,
    // divided further by `density`
    inline GridSpec matched_accuracy_grid(const SystemConfig &c, const std::vector<Target> &truth, double snr_db,
                                          double density = 1.0)
    {
        if (!(density > 0.0))
            throw std::invalid_argument("matched_accuracy_grid: density must be positive");
        const auto cells = rayleigh_scales(c);
        const CrbEntry r = rms_rcrb(rcrb_single(c, truth, noise_power_for_snr(snr_db)));
        const double f = 4.0 * density;
        const std::array<double, 3> step = {r.theta / f, r.range / f, r.velocity / f};
        GridSpec g;
        for (Dim d : kAllDims)
        {
            std::vector<std::pair<double, double>> iv;
            for (const auto &t : truth)
                iv.push_back({target_param(t, d) - cells[index(d)], target_param(t, d) + cells[index(d)]});
            std::sort(iv.begin(), iv.end());
            std::vector<std::pair<double, double>> merged;
            for (const auto &x : iv)
                if (!merged.empty() && x.first <= merged.back().second)
                    merged.back().second = std::max(merged.back().second, x.second);
                else
                    merged.push_back(x);
            for (const auto &m : merged)
                for (double v : grid_axis(m.first, m.second, step[index(d)]))
                    g[d].push_back(v);
        }
        return g;
    }

    namespace detail
    {
        inline double median(std::vector<double> v)
        {
            std::sort(v.begin(), v.end());
            const std::size_t n = v.size();
            return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
        }

        // Sub-grid of about `points` points around the first target
        inline GridSpec grid_chunk(const GridSpec &g, std::size_t points)
        {
            const double side = std::cbrt(double(points));
            GridSpec c;
            for (Dim d : kAllDims)
            {
                const auto &ax = g[d];
                const std::size_t k = std::clamp<std::size_t>(std::size_t(side), 1, ax.size());
                c[d].assign(ax.begin(), ax.begin() + std::ptrdiff_t(k));
            }
            return c;
        }
    }

    // Median-of-repeats wall time per estimator per dims (smoothing resolved per dims)
    inline std::vector<TimingRow> run_timing(const RunSpec &spec, const std::vector<Shape3> &dims_grid,
                                             const TimingOptions &opt = {})
    {
        using clk = std::chrono::steady_clock;
        std::vector<TimingRow> rows;
        for (const auto &dims : dims_grid)
        {
            const SystemConfig c = with_dims(spec.scenario.config, dims[0], dims[1], dims[2]);
            Scenario sc = make_scenario(c, spec.scenario.targets, opt.snr_db);
            const SmoothingConfig sm = spec.smoothing_for(c.shape());
            const Observation obs = synthesize(sc, derive_seed(spec.master_seed, {dims[0], dims[1], dims[2]}));
            RunSpec local = spec;
            local.scenario = sc;
            double pi_time = std::numeric_limits<double>::quiet_NaN();
            std::vector<TimingRow> block;
            for (Estimator e : spec.estimators)
            {
                TimingRow row;
                row.dims = dims;
                row.estimator = std::string(to_string(e));
                try
                {
                    std::vector<double> t;
                    if (e == Estimator::grid_oracle)
                    {
                        const GridSpec full = matched_accuracy_grid(c, sc.targets, opt.snr_db, opt.grid_density);
                        row.grid_points = full.points();
                        const double D = double(sm.dimension());
                        if (16.0 * D * D * 3.0 > double(opt.memory_budget_bytes))
                            throw std::length_error("3D covariance exceeds memory budget");
                        const bool project = row.grid_points > opt.chunk_points;
                        const GridSpec g = project ? detail::grid_chunk(full, opt.chunk_points) : full;
                        for (std::size_t r = 0; r < opt.repeats; ++r)
                        {
                            const auto res = grid_music_oracle(obs, sc.targets.size(), g, sm, std::max(kOracleGridGuard, g.points()),
                                                               /*timing_only=*/project);
                            const double scale = double(row.grid_points) / double(g.points());
                            t.push_back(res.fixed_seconds + res.search_seconds * scale);
                        }
                        row.projected = project;
                    }
                    else
                        for (std::size_t r = 0; r < opt.repeats; ++r)
                        {
                            const auto t0 = clk::now();
                            (void)run_estimator(e, local, sc, obs);
                            t.push_back(std::chrono::duration<double>(clk::now() - t0).count());
                        }
                    row.median_s = detail::median(t);
                    if (e == Estimator::pi2dmusic)
                        pi_time = row.median_s;
                }
                catch (const std::exception &ex)
                {
                    row.skipped = ex.what();
                }
                block.push_back(row);
            }
            for (auto &r : block)
            {
                r.ratio_to_pi = r.median_s / pi_time;
                rows.push_back(r);
            }
        }
        return rows;
    }

    // ---------------------------------------------------------------- CSV

    inline constexpr std::array<std::string_view, 11> kCsvHeader = {
        "estimator", "snr_db", "rmse_theta_deg", "rmse_range_m", "rmse_velocity_mps", "rcrb_theta_deg",
        "rcrb_range_m", "rcrb_velocity_mps", "mean_wall_time_s", "trials_used", "failures"};

    // Shortest round-trip decimal
    inline std::string format_double(double x)
    {
        if (std::isnan(x))
            return "nan";
        char buf[64];
        const auto r = std::to_chars(buf, buf + sizeof buf, x);
        return std::string(buf, r.ptr);
    }

    inline double parse_double(std::string_view s)
    {
        if (s == "nan")
            return std::numeric_limits<double>::quiet_NaN();
        double x = 0.0;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size())
            throw std::invalid_argument("not a number: '" + std::string(s) + "'");
        return x;
    }

    namespace detail
    {
        inline std::string csv_field(const std::string &s)
        {
            if (s.find_first_of(",\"\r\n") == std::string::npos)
                return s;
            std::string q = "\"";
            for (char ch : s)
                q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
            return q + "\"";
        }

        inline std::vector<std::string> split_csv_line(const std::string &line)
        {
            std::vector<std::string> f(1);
            bool quoted = false;
            for (std::size_t i = 0; i < line.size(); ++i)
            {
                const char ch = line[i];
                if (quoted)
                {
                    if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"')
                    {
                        f.back() += '"';
                        ++i;
                    }
                    else if (ch == '"')
                        quoted = false;
                    else
                        f.back() += ch;
                }
                else if (ch == '"')
                    quoted = true;
                else if (ch == ',')
                    f.emplace_back();
                else
                    f.back() += ch;
            }
            return f;
        }
    }

    inline std::string to_csv(const std::vector<RmseRow> &rows)
    {
        std::string s;
        for (std::size_t i = 0; i < kCsvHeader.size(); ++i)
            s += std::string(i ? "," : "") + std::string(kCsvHeader[i]);
        s += "\r\n";
        for (const auto &r : rows)
        {
            s += detail::csv_field(r.estimator);
            for (double x : {r.snr_db, r.rmse_theta_deg, r.rmse_range_m, r.rmse_velocity_mps, r.rcrb_theta_deg,
                             r.rcrb_range_m, r.rcrb_velocity_mps, r.mean_wall_time_s})
                s += "," + format_double(x);
            s += "," + std::to_string(r.trials_used) + "," + std::to_string(r.failures) + "\r\n";
        }
        return s;
    }

    inline std::vector<RmseRow> parse_csv(const std::string &text)
    {
        std::vector<RmseRow> rows;
        std::istringstream is(text);
        std::string line;
        bool header = true;
        while (std::getline(is, line))
        {
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            if (line.empty())
                continue;
            const auto f = detail::split_csv_line(line);
            if (f.size() != kCsvHeader.size())
                throw std::invalid_argument("CSV row has " + std::to_string(f.size()) + " fields");
            if (header)
            {
                for (std::size_t i = 0; i < f.size(); ++i)
                    if (f[i] != kCsvHeader[i])
                        throw std::invalid_argument("unexpected CSV header field '" + f[i] + "'");
                header = false;
                continue;
            }
            RmseRow r;
            r.estimator = f[0];
            double *dst[] = {&r.snr_db, &r.rmse_theta_deg, &r.rmse_range_m, &r.rmse_velocity_mps, &r.rcrb_theta_deg,
                             &r.rcrb_range_m, &r.rcrb_velocity_mps, &r.mean_wall_time_s};
            for (std::size_t i = 0; i < 8; ++i)
                *dst[i] = parse_double(f[i + 1]);
            r.trials_used = std::stoull(f[9]);
            r.failures = std::stoull(f[10]);
            rows.push_back(r);
        }
        return rows;
    }

    namespace detail
    {
        inline void write_text(const std::filesystem::path &path, const std::string &text)
        {
            std::ofstream f(path, std::ios::binary);
            if (!f)
                throw std::runtime_error(path.string() + ": cannot open for writing");
            f << text;
            if (!f)
                throw std::runtime_error(path.string() + ": write failed");
        }
    }

    inline void emit_csv(const std::vector<RmseRow> &rows, const std::filesystem::path &path)
    {
        detail::write_text(path, to_csv(rows));
    }

    // gnuplot data: one block per estimator (select with `index`), columns as the CSV minus the name
    inline void emit_dat(const std::vector<RmseRow> &rows, const std::filesystem::path &path)
    {
        std::string s = "# snr_db rmse_theta_deg rmse_range_m rmse_velocity_mps rcrb_theta_deg rcrb_range_m "
                        "rcrb_velocity_mps mean_wall_time_s trials_used failures\n";
        std::string current;
        for (const auto &r : rows)
        {
            if (r.estimator != current)
            {
                if (!current.empty())
                    s += "\n\n";
                s += "# " + r.estimator + "\n";
                current = r.estimator;
            }
            for (double x : {r.snr_db, r.rmse_theta_deg, r.rmse_range_m, r.rmse_velocity_mps, r.rcrb_theta_deg,
                             r.rcrb_range_m, r.rcrb_velocity_mps, r.mean_wall_time_s})
                s += format_double(x) + " ";
            s += std::to_string(r.trials_used) + " " + std::to_string(r.failures) + "\n";
        }
        detail::write_text(path, s);
    }

    inline std::string timing_to_csv(const std::vector<TimingRow> &rows)
    {
        std::string s = "L,N,M,estimator,median_s,ratio_to_pi,grid_points,projected,skipped\r\n";
        for (const auto &r : rows)
            s += std::to_string(r.dims[0]) + "," + std::to_string(r.dims[1]) + "," + std::to_string(r.dims[2]) + "," +
                 detail::csv_field(r.estimator) + "," + format_double(r.median_s) + "," + format_double(r.ratio_to_pi) +
                 "," + std::to_string(r.grid_points) + "," + (r.projected ? "1" : "0") + "," +
                 detail::csv_field(r.skipped) + "\r\n";
        return s;
    }
}

#endif
