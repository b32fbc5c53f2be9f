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

#ifndef JARVE_SCENARIO_HPP
#define JARVE_SCENARIO_HPP

#include "jarve/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace jarve
{
    // Waveform and array constants. Defaults are the 25 GHz / 120 kHz reference system.
    struct SystemConfig
    {
        double carrier_freq_hz = 25.0e9;
        double subcarrier_spacing_hz = 120.0e3;
        double data_duration_s = 8.33e-6;
        double cp_duration_s = 0.59e-6;
        std::size_t n_antennas = 16;
        std::size_t n_subcarriers = 128;
        std::size_t n_symbols = 80;
        double antenna_spacing_m = kSpeedOfLight / 25.0e9 / 2.0; // half wavelength at the default carrier
        double noise_power = 0.0;

        double symbol_period_s() const { return data_duration_s + cp_duration_s; }
        double wavelength_m() const { return kSpeedOfLight / carrier_freq_hz; }
        Shape3 shape() const { return {n_antennas, n_subcarriers, n_symbols}; }
        std::size_t size() const { return n_antennas * n_subcarriers * n_symbols; }

        // Unambiguous limits
        double max_range_m() const { return kSpeedOfLight / (2.0 * subcarrier_spacing_hz); }
        double max_speed_mps() const { return kSpeedOfLight / (4.0 * carrier_freq_hz * symbol_period_s()); }

        // Rayleigh cells of the full aperture / bandwidth / dwell
        double range_resolution_m() const { return kSpeedOfLight / (2.0 * double(n_subcarriers) * subcarrier_spacing_hz); }
        double velocity_resolution_mps() const
        {
            return kSpeedOfLight / (2.0 * carrier_freq_hz * double(n_symbols) * symbol_period_s());
        }
        double azimuth_resolution_deg() const // broadside
        {
            return std::asin(std::min(1.0, wavelength_m() / (double(n_antennas) * antenna_spacing_m))) * kRadToDeg;
        }
    };

    // Same system with the antenna spacing set to half a wavelength
    inline SystemConfig with_half_wavelength_spacing(SystemConfig c)
    {
        c.antenna_spacing_m = c.wavelength_m() / 2.0;
        return c;
    }

    inline SystemConfig with_dims(SystemConfig c, std::size_t L, std::size_t N, std::size_t M)
    {
        c.n_antennas = L;
        c.n_subcarriers = N;
        c.n_symbols = M;
        return c;
    }

    struct Target
    {
        double azimuth_deg = 0.0;
        double range_m = 0.0;
        double velocity_mps = 0.0;
        cdouble backscatter{1.0, 0.0};
    };

    struct Scenario
    {
        SystemConfig config;
        std::vector<Target> targets;
        double snr_db = std::numeric_limits<double>::infinity();
        bool random_phases = true; // draw arg(alpha_i) uniformly per trial, keeping |alpha_i|
    };

    struct SmoothingConfig
    {
        std::size_t sub_antennas = 1;
        std::size_t sub_subcarriers = 1;
        std::size_t sub_symbols = 1;

        Shape3 sub() const { return {sub_antennas, sub_subcarriers, sub_symbols}; }
        std::size_t sub(Dim d) const { return sub()[index(d)]; }
        std::size_t dimension() const { return sub_antennas * sub_subcarriers * sub_symbols; }
        Shape3 snapshot_counts(const Shape3 &shape) const
        {
            return {shape[0] - sub_antennas + 1, shape[1] - sub_subcarriers + 1, shape[2] - sub_symbols + 1};
        }
        bool operator==(const SmoothingConfig &) const = default;
    };

    // Fixed windows used for the RMSE experiments
    inline SmoothingConfig smoothing_fixed_preset() { return {6, 40, 25}; }

    // Windows proportional to the cube: 3L/4, N/10, 3M/8 (rounded, at least 1)
    inline SmoothingConfig smoothing_ratio_preset(const Shape3 &shape)
    {
        auto r = [](double x)
        { return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(x))); };
        return {r(3.0 * double(shape[0]) / 4.0), r(double(shape[1]) / 10.0), r(3.0 * double(shape[2]) / 8.0)};
    }

    // "fixed", "ratio" or "a,b,c"
    inline SmoothingConfig parse_smoothing(const std::string &text, const Shape3 &shape)
    {
        if (text == "fixed")
            return smoothing_fixed_preset();
        if (text == "ratio")
            return smoothing_ratio_preset(shape);
        SmoothingConfig s;
        std::istringstream is(text);
        std::array<long long, 3> v{};
        char c1 = 0, c2 = 0;
        bool ok = static_cast<bool>(is >> v[0] >> c1 >> v[1] >> c2 >> v[2]) && c1 == ',' && c2 == ',';
        if (ok)
            ok = (is >> std::ws).eof();
        if (!ok)
            throw ConfigError("smoothing must be 'fixed', 'ratio' or 'La,Nf,Mt', got '" + text + "'");
        for (auto x : v)
            if (x < 1)
                throw ConfigError("smoothing window sizes must be >= 1");
        s.sub_antennas = std::size_t(v[0]);
        s.sub_subcarriers = std::size_t(v[1]);
        s.sub_symbols = std::size_t(v[2]);
        return s;
    }

    // Per-dimension phase increments between adjacent antennas / subcarriers / symbols
    struct PhaseIncrements
    {
        double theta = 0.0;
        double range = 0.0;
        double velocity = 0.0;

        double operator[](Dim d) const { return d == Dim::azimuth ? theta : (d == Dim::range ? range : velocity); }
    };

    // Parameter value (deg, m, m/s) -> phase increment (rad)
    inline double phase_of(const SystemConfig &c, Dim d, double value)
    {
        switch (d)
        {
        case Dim::azimuth:
            return 2.0 * kPi * c.antenna_spacing_m * std::sin(value * kDegToRad) / c.wavelength_m();
        case Dim::range:
            return -4.0 * kPi * value * c.subcarrier_spacing_hz / kSpeedOfLight;
        case Dim::velocity:
            return 4.0 * kPi * value * c.carrier_freq_hz * c.symbol_period_s() / kSpeedOfLight;
        }
        return 0.0;
    }

    inline PhaseIncrements phase_increments(const SystemConfig &c, const Target &t)
    {
        return {phase_of(c, Dim::azimuth, t.azimuth_deg), phase_of(c, Dim::range, t.range_m),
                phase_of(c, Dim::velocity, t.velocity_mps)};
    }

    // Wrap to (-pi, pi]
    inline double wrap_pi(double phi)
    {
        double w = std::remainder(phi, 2.0 * kPi);
        return w <= -kPi ? w + 2.0 * kPi : w;
    }

    // Phase (rad) -> parameter. Returns nullopt when an azimuth phase has no real arcsine.
    // Range uses the branch (-2pi, 0] so that [0, c/(2 df)) is covered.
    inline std::optional<double> try_param_from_phase(const SystemConfig &c, Dim d, double phi)
    {
        phi = wrap_pi(phi);
        switch (d)
        {
        case Dim::azimuth:
        {
            double x = c.wavelength_m() * phi / (2.0 * kPi * c.antenna_spacing_m);
            if (!(std::abs(x) <= 1.0))
                return std::nullopt;
            return std::asin(x) * kRadToDeg;
        }
        case Dim::range:
        {
            if (phi > 0.0)
                phi -= 2.0 * kPi;
            return -phi * kSpeedOfLight / (4.0 * kPi * c.subcarrier_spacing_hz);
        }
        case Dim::velocity:
            return phi * kSpeedOfLight / (4.0 * kPi * c.carrier_freq_hz * c.symbol_period_s());
        }
        return std::nullopt;
    }

    inline double param_from_phase(const SystemConfig &c, Dim d, double phi)
    {
        auto p = try_param_from_phase(c, d, phi);
        if (!p)
            throw EstimationError("non-physical root: azimuth phase outside the arcsine domain");
        return *p;
    }

    // Same mapping with the arcsine argument clamped to [-1, 1]; sets *clamped when it had to
    inline double param_from_phase_clamped(const SystemConfig &c, Dim d, double phi, bool *clamped = nullptr)
    {
        if (auto p = try_param_from_phase(c, d, phi))
            return *p;
        if (clamped)
            *clamped = true;
        return wrap_pi(phi) > 0.0 ? 90.0 : -90.0;
    }

    inline double target_param(const Target &t, Dim d)
    {
        return d == Dim::azimuth ? t.azimuth_deg : (d == Dim::range ? t.range_m : t.velocity_mps);
    }

    // sigma^2 for |alpha| = 1 at the given SNR; zero for +inf
    inline double noise_power_for_snr(double snr_db)
    {
        if (std::isinf(snr_db) && snr_db > 0)
            return 0.0;
        return std::pow(10.0, -snr_db / 10.0);
    }

    inline Scenario make_scenario(SystemConfig config, std::vector<Target> targets, double snr_db)
    {
        config.noise_power = noise_power_for_snr(snr_db);
        return Scenario{config, std::move(targets), snr_db, true};
    }

    inline std::vector<Target> reference_targets()
    {
        return {{20.0, 39.73, -10.0, {1.0, 0.0}},
                {-23.16, 60.5, 29.61, {1.0, 0.0}},
                {-10.6, 80.21, 10.11, {1.0, 0.0}}};
    }

    // Reference system with the three reference targets
    inline Scenario reference_scenario(double snr_db = 10.0)
    {
        return make_scenario(SystemConfig{}, reference_targets(), snr_db);
    }

    // ---------------------------------------------------------------- validation

    enum class IssueCode
    {
        symbol_duration_mismatch,
        carrier_too_low,
        dims_too_small,
        bad_antenna_spacing,
        bad_noise_power,
        nonfinite_value,
        no_targets,
        azimuth_out_of_sector,
        range_out_of_bounds,
        velocity_out_of_bounds,
        duplicate_targets,
        smoothing_invalid,
        smoothing_exceeds_array,
        not_detectable,
        doppler_within_symbol, // warning
    };

    enum class Severity
    {
        error,
        warning
    };

    struct ValidationIssue
    {
        IssueCode code;
        Severity severity;
        std::string message;
    };

    struct ValidationReport
    {
        std::vector<ValidationIssue> issues;

        bool valid() const
        {
            return std::none_of(issues.begin(), issues.end(), [](const ValidationIssue &i)
                                { return i.severity == Severity::error; });
        }
        bool has(IssueCode c) const
        {
            return std::any_of(issues.begin(), issues.end(), [c](const ValidationIssue &i)
                               { return i.code == c; });
        }
        std::string summary() const
        {
            std::string s;
            for (const auto &i : issues)
                s += (i.severity == Severity::error ? "error: " : "warning: ") + i.message + "\n";
            return s;
        }
    };

    // T may differ from 1/df by this relative amount (tabulated durations are rounded)
    inline constexpr double kSymbolDurationRelTol = 1e-3;

    inline ValidationReport validate(const SystemConfig &c)
    {
        ValidationReport rep;
        auto err = [&](IssueCode code, std::string msg)
        { rep.issues.push_back({code, Severity::error, std::move(msg)}); };

        for (double x : {c.carrier_freq_hz, c.subcarrier_spacing_hz, c.data_duration_s, c.cp_duration_s,
                         c.antenna_spacing_m, c.noise_power})
            if (!std::isfinite(x))
                err(IssueCode::nonfinite_value, "system parameter is not finite");
        if (!rep.valid())
            return rep;

        if (c.subcarrier_spacing_hz <= 0.0 || c.data_duration_s <= 0.0 ||
            std::abs(c.data_duration_s * c.subcarrier_spacing_hz - 1.0) > kSymbolDurationRelTol)
            err(IssueCode::symbol_duration_mismatch, "data duration T must equal 1/subcarrier spacing");
        if (c.cp_duration_s < 0.0)
            err(IssueCode::symbol_duration_mismatch, "cyclic prefix duration must be >= 0");
        if (!(c.carrier_freq_hz > 10.0 * double(c.n_subcarriers) * c.subcarrier_spacing_hz))
            err(IssueCode::carrier_too_low, "carrier must exceed 10 * N * subcarrier spacing");
        if (c.n_antennas < 2 || c.n_subcarriers < 2 || c.n_symbols < 2)
            err(IssueCode::dims_too_small, "L, N and M must all be >= 2");
        if (!(c.antenna_spacing_m > 0.0))
            err(IssueCode::bad_antenna_spacing, "antenna spacing must be > 0");
        else if (c.carrier_freq_hz > 0.0 && c.antenna_spacing_m > c.wavelength_m() / 2.0 * (1.0 + 1e-12))
            err(IssueCode::bad_antenna_spacing, "antenna spacing above half a wavelength makes azimuth ambiguous");
        if (c.noise_power < 0.0)
            err(IssueCode::bad_noise_power, "noise power must be >= 0");
        return rep;
    }

    inline void validate_smoothing(const SmoothingConfig &s, const Shape3 &shape, ValidationReport &rep)
    {
        const Shape3 sub = s.sub();
        for (std::size_t k = 0; k < 3; ++k)
        {
            if (sub[k] < 1)
                rep.issues.push_back({IssueCode::smoothing_invalid, Severity::error, "smoothing window sizes must be >= 1"});
            else if (sub[k] > shape[k])
                rep.issues.push_back({IssueCode::smoothing_exceeds_array, Severity::error,
                                      "smoothing window exceeds array along " + std::string(to_string(kAllDims[k]))});
        }
    }

    // Full check of a scenario; the smoothing windows are checked when given
    inline ValidationReport validate(const Scenario &sc, const std::optional<SmoothingConfig> &smoothing = std::nullopt)
    {
        ValidationReport rep = validate(sc.config);
        const auto &c = sc.config;
        auto err = [&](IssueCode code, std::string msg)
        { rep.issues.push_back({code, Severity::error, std::move(msg)}); };

        if (sc.targets.empty())
            err(IssueCode::no_targets, "scenario has no targets");
        if (std::isnan(sc.snr_db))
            err(IssueCode::nonfinite_value, "snr_db is NaN");

        const bool sys_ok = rep.valid();
        for (std::size_t i = 0; i < sc.targets.size(); ++i)
        {
            const Target &t = sc.targets[i];
            const std::string tag = "target " + std::to_string(i) + ": ";
            if (!std::isfinite(t.azimuth_deg) || !std::isfinite(t.range_m) || !std::isfinite(t.velocity_mps) ||
                !std::isfinite(t.backscatter.real()) || !std::isfinite(t.backscatter.imag()))
            {
                err(IssueCode::nonfinite_value, tag + "non-finite parameter");
                continue;
            }
            if (!(std::abs(t.azimuth_deg) < 90.0))
                err(IssueCode::azimuth_out_of_sector, tag + "azimuth must satisfy |theta| < 90 deg");
            if (!sys_ok)
                continue;
            if (!(t.range_m > 0.0 && t.range_m < c.max_range_m()))
                err(IssueCode::range_out_of_bounds,
                    tag + "range exceeds unambiguous limit (0, " + std::to_string(c.max_range_m()) + ") m");
            if (!(std::abs(t.velocity_mps) < c.max_speed_mps()))
                err(IssueCode::velocity_out_of_bounds,
                    tag + "velocity exceeds unambiguous limit " + std::to_string(c.max_speed_mps()) + " m/s");
            // Doppler spread inside one symbol: f_d * Tbar = 2 v fc Tbar / c
            double fdT = 2.0 * std::abs(t.velocity_mps) * c.carrier_freq_hz * c.symbol_period_s() / kSpeedOfLight;
            if (fdT >= 0.01)
                rep.issues.push_back({IssueCode::doppler_within_symbol, Severity::warning,
                                      tag + "Doppler times symbol period is " + std::to_string(fdT) +
                                          " (constant-phase-per-symbol approximation degrades above 0.01)"});
        }
        for (std::size_t i = 0; i < sc.targets.size(); ++i)
            for (std::size_t j = i + 1; j < sc.targets.size(); ++j)
            {
                const Target &a = sc.targets[i], &b = sc.targets[j];
                if (a.azimuth_deg == b.azimuth_deg && a.range_m == b.range_m && a.velocity_mps == b.velocity_mps)
                    err(IssueCode::duplicate_targets,
                        "targets " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
            }

        if (smoothing)
        {
            validate_smoothing(*smoothing, c.shape(), rep);
            const std::size_t U = sc.targets.size();
            const auto s = smoothing->sub();
            std::size_t slice_min = std::min({s[0] * s[1], s[0] * s[2], s[1] * s[2]});
            if (U > 0 && !(U < slice_min))
                err(IssueCode::not_detectable, "target count must be below every 2D smoothed dimension product");
            for (std::size_t k = 0; k < 3; ++k)
                if (U > 0 && s[k] <= U)
                    err(IssueCode::not_detectable, "1D smoothing window along " + std::string(to_string(kAllDims[k])) +
                                                       " must exceed the target count");
        }
        return rep;
    }

    inline void require_valid(const Scenario &sc, const std::optional<SmoothingConfig> &smoothing = std::nullopt)
    {
        auto rep = validate(sc, smoothing);
        if (!rep.valid())
            throw ConfigError("invalid scenario:\n" + rep.summary());
    }
}

#endif
