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

#ifndef JARVE_SCENARIO_IO_HPP
#define JARVE_SCENARIO_IO_HPP

// YAML scenario files. Layout (every key optional except targets):
//
//   system:
//     carrier_freq_hz: 25.0e9
//     subcarrier_spacing_hz: 120.0e3
//     data_duration_s: 8.33e-6
//     cp_duration_s: 0.59e-6
//     n_antennas: 16
//     n_subcarriers: 128
//     n_symbols: 80
//     antenna_spacing_m: half_wavelength   # or a number
//   snr_db: 10
//   random_phases: true
//   smoothing: fixed                       # fixed | ratio | [6, 40, 25]
//   lm: {q_max: 100, eps1: 1.0e-10, eps2: 1.0e-10, tau: 1.0e-3}
//   targets:
//     - {azimuth_deg: 20, range_m: 39.73, velocity_mps: -10, amplitude: 1, phase_rad: 0}

#include "jarve/music2d.hpp"

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <set>

namespace jarve
{
    struct ScenarioFile
    {
        Scenario scenario;
        std::optional<SmoothingConfig> smoothing;
        std::optional<LmSettings> lm;
    };

    namespace detail
    {
        inline void reject_unknown(const YAML::Node &n, const std::set<std::string> &known, const std::string &where)
        {
            if (!n.IsMap())
                throw ConfigError(where + ": expected a mapping");
            for (const auto &kv : n)
            {
                const auto k = kv.first.as<std::string>();
                if (!known.count(k))
                    throw ConfigError(where + ": unknown key '" + k + "'");
            }
        }

        template <class T>
        void read_opt(const YAML::Node &n, const char *key, T &dst, const std::string &where)
        {
            if (!n[key])
                return;
            try
            {
                dst = n[key].as<T>();
            }
            catch (const YAML::Exception &)
            {
                throw ConfigError(where + "." + key + ": wrong type");
            }
        }
    }

    inline ScenarioFile parse_scenario_yaml(const YAML::Node &root, const std::string &origin = "scenario")
    {
        using detail::read_opt;
        detail::reject_unknown(root, {"system", "snr_db", "random_phases", "smoothing", "lm", "targets"}, origin);
        ScenarioFile f;
        SystemConfig c;
        if (const auto s = root["system"])
        {
            const std::string w = origin + ".system";
            detail::reject_unknown(s, {"carrier_freq_hz", "subcarrier_spacing_hz", "data_duration_s", "cp_duration_s",
                                       "n_antennas", "n_subcarriers", "n_symbols", "antenna_spacing_m"},
                                   w);
            read_opt(s, "carrier_freq_hz", c.carrier_freq_hz, w);
            read_opt(s, "subcarrier_spacing_hz", c.subcarrier_spacing_hz, w);
            read_opt(s, "data_duration_s", c.data_duration_s, w);
            read_opt(s, "cp_duration_s", c.cp_duration_s, w);
            read_opt(s, "n_antennas", c.n_antennas, w);
            read_opt(s, "n_subcarriers", c.n_subcarriers, w);
            read_opt(s, "n_symbols", c.n_symbols, w);
            c = with_half_wavelength_spacing(c);
            if (s["antenna_spacing_m"] && s["antenna_spacing_m"].as<std::string>() != "half_wavelength")
                read_opt(s, "antenna_spacing_m", c.antenna_spacing_m, w);
        }
        double snr_db = 10.0;
        read_opt(root, "snr_db", snr_db, origin);

        const auto tl = root["targets"];
        if (!tl || !tl.IsSequence() || tl.size() == 0)
            throw ConfigError(origin + ": 'targets' must be a non-empty list");
        std::vector<Target> targets;
        for (std::size_t i = 0; i < tl.size(); ++i)
        {
            const std::string w = origin + ".targets[" + std::to_string(i) + "]";
            const auto t = tl[i];
            detail::reject_unknown(t, {"azimuth_deg", "range_m", "velocity_mps", "amplitude", "phase_rad"}, w);
            for (const char *k : {"azimuth_deg", "range_m", "velocity_mps"})
                if (!t[k])
                    throw ConfigError(w + ": missing '" + k + "'");
            Target x;
            double amp = 1.0, ph = 0.0;
            read_opt(t, "azimuth_deg", x.azimuth_deg, w);
            read_opt(t, "range_m", x.range_m, w);
            read_opt(t, "velocity_mps", x.velocity_mps, w);
            read_opt(t, "amplitude", amp, w);
            read_opt(t, "phase_rad", ph, w);
            x.backscatter = std::polar(amp, ph);
            targets.push_back(x);
        }
        f.scenario = make_scenario(c, std::move(targets), snr_db);
        read_opt(root, "random_phases", f.scenario.random_phases, origin);

        if (const auto sm = root["smoothing"])
        {
            if (sm.IsSequence())
            {
                if (sm.size() != 3)
                    throw ConfigError(origin + ".smoothing: need three window sizes");
                f.smoothing = SmoothingConfig{sm[0].as<std::size_t>(), sm[1].as<std::size_t>(), sm[2].as<std::size_t>()};
            }
            else
                f.smoothing = parse_smoothing(sm.as<std::string>(), c.shape());
        }
        if (const auto lm = root["lm"])
        {
            const std::string w = origin + ".lm";
            detail::reject_unknown(lm, {"q_max", "eps1", "eps2", "tau"}, w);
            LmSettings s;
            read_opt(lm, "q_max", s.q_max, w);
            read_opt(lm, "eps1", s.eps1, w);
            read_opt(lm, "eps2", s.eps2, w);
            read_opt(lm, "tau", s.tau, w);
            s.check();
            f.lm = s;
        }
        return f;
    }

    inline ScenarioFile load_scenario(const std::filesystem::path &path)
    {
        YAML::Node root;
        try
        {
            root = YAML::LoadFile(path.string());
        }
        catch (const YAML::Exception &e)
        {
            throw ConfigError(path.string() + ": " + e.what());
        }
        return parse_scenario_yaml(root, path.string());
    }
}

#endif
