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

#ifndef JARVE_SIGNAL_HPP
#define JARVE_SIGNAL_HPP

#include "jarve/random.hpp"
#include "jarve/scenario.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

namespace jarve
{
    // Post-equalization observation cube Z(l, n, m). Storage is the flattening order:
    // index = (l * N + n) * M + m, i.e. antenna-major, then subcarrier, then symbol.
    class Observation
    {
    public:
        Observation() = default;
        explicit Observation(const SystemConfig &config)
            : config_(config), data_(config.size(), cdouble(0.0, 0.0)) {}

        const SystemConfig &config() const { return config_; }
        Shape3 shape() const { return config_.shape(); }
        std::size_t size() const { return data_.size(); }

        cdouble &operator()(std::size_t l, std::size_t n, std::size_t m)
        {
            return data_[(l * config_.n_subcarriers + n) * config_.n_symbols + m];
        }
        const cdouble &operator()(std::size_t l, std::size_t n, std::size_t m) const
        {
            return data_[(l * config_.n_subcarriers + n) * config_.n_symbols + m];
        }

        const std::vector<cdouble> &data() const { return data_; }
        std::vector<cdouble> &data() { return data_; }

        bool all_finite() const
        {
            for (const auto &z : data_)
                if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
                    return false;
            return true;
        }

    private:
        SystemConfig config_;
        std::vector<cdouble> data_;
    };

    inline CVec flatten(const Observation &obs)
    {
        return Eigen::Map<const CVec>(obs.data().data(), Eigen::Index(obs.size()));
    }

    inline Observation unflatten(const CVec &z, const SystemConfig &config)
    {
        if (std::size_t(z.size()) != config.size())
            throw std::invalid_argument("unflatten: vector length does not match L*N*M");
        Observation obs(config);
        std::copy(z.data(), z.data() + z.size(), obs.data().begin());
        return obs;
    }

    struct SteeringSet
    {
        CVec a_theta, a_r, a_v, a_full;
    };

    // Steering vectors truncated to dims = (L', N', M')
    inline SteeringSet steering(const SystemConfig &c, double theta_deg, double range_m, double velocity_mps,
                                const Shape3 &dims)
    {
        const Shape3 full = c.shape();
        for (std::size_t k = 0; k < 3; ++k)
            if (dims[k] < 1 || dims[k] > full[k])
                throw std::invalid_argument("steering: requested length outside [1, full size]");
        SteeringSet s;
        s.a_theta = phase_ramp(phase_of(c, Dim::azimuth, theta_deg), dims[0]);
        s.a_r = phase_ramp(phase_of(c, Dim::range, range_m), dims[1]);
        s.a_v = phase_ramp(phase_of(c, Dim::velocity, velocity_mps), dims[2]);
        s.a_full = kron(s.a_theta, kron(s.a_r, s.a_v));
        return s;
    }

    inline SteeringSet steering(const SystemConfig &c, const Target &t)
    {
        return steering(c, t.azimuth_deg, t.range_m, t.velocity_mps, c.shape());
    }

    struct Manifold
    {
        CMat A, A_theta, A_r, A_v;
    };

    inline Manifold manifold(const SystemConfig &c, const std::vector<Target> &targets)
    {
        const auto U = Eigen::Index(targets.size());
        Manifold m;
        m.A_theta.resize(Eigen::Index(c.n_antennas), U);
        m.A_r.resize(Eigen::Index(c.n_subcarriers), U);
        m.A_v.resize(Eigen::Index(c.n_symbols), U);
        for (Eigen::Index i = 0; i < U; ++i)
        {
            const auto ph = phase_increments(c, targets[std::size_t(i)]);
            m.A_theta.col(i) = phase_ramp(ph.theta, c.n_antennas);
            m.A_r.col(i) = phase_ramp(ph.range, c.n_subcarriers);
            m.A_v.col(i) = phase_ramp(ph.velocity, c.n_symbols);
        }
        m.A = khatri_rao(m.A_theta, khatri_rao(m.A_r, m.A_v));
        return m;
    }

    inline CVec backscatter_vector(const std::vector<Target> &targets)
    {
        CVec a(Eigen::Index(targets.size()));
        for (std::size_t i = 0; i < targets.size(); ++i)
            a[Eigen::Index(i)] = targets[i].backscatter;
        return a;
    }

    // Noise-free cube sum_i alpha_i a_theta(l) a_r(n) a_v(m)
    inline Observation noiseless_observation(const SystemConfig &c, const std::vector<Target> &targets)
    {
        Observation obs(c);
        const std::size_t L = c.n_antennas, N = c.n_subcarriers, M = c.n_symbols;
        for (const auto &t : targets)
        {
            const auto ph = phase_increments(c, t);
            const CVec at = phase_ramp(ph.theta, L), ar = phase_ramp(ph.range, N), av = phase_ramp(ph.velocity, M);
            for (std::size_t l = 0; l < L; ++l)
                for (std::size_t n = 0; n < N; ++n)
                {
                    const cdouble w = t.backscatter * at[Eigen::Index(l)] * ar[Eigen::Index(n)];
                    cdouble *row = &obs(l, n, 0);
                    for (std::size_t m = 0; m < M; ++m)
                        row[m] += w * av[Eigen::Index(m)];
                }
        }
        return obs;
    }

    // Adds circularly-symmetric complex Gaussian noise of variance sigma2
    inline void add_noise(Observation &obs, double sigma2, Rng &rng)
    {
        if (sigma2 <= 0.0)
            return;
        std::normal_distribution<double> g(0.0, std::sqrt(sigma2 / 2.0));
        for (auto &z : obs.data())
        {
            double re = g(rng);
            double im = g(rng);
            z += cdouble(re, im);
        }
    }

    // Signal plus noise with variance scenario.config.noise_power; deterministic in seed.
    // Backscatter coefficients are used as given (phase randomization is the caller's choice).
    inline Observation synthesize(const Scenario &sc, std::uint64_t seed)
    {
        Observation obs = noiseless_observation(sc.config, sc.targets);
        Rng rng(seed);
        add_noise(obs, sc.config.noise_power, rng);
        return obs;
    }

    // Replaces each arg(alpha_i) with a uniform draw, keeping |alpha_i|
    inline std::vector<Target> randomize_phases(std::vector<Target> targets, Rng &rng)
    {
        std::uniform_real_distribution<double> u(-kPi, kPi);
        for (auto &t : targets)
            t.backscatter = std::polar(std::abs(t.backscatter), u(rng));
        return targets;
    }

    // ---------------------------------------------------------------- binary I/O
    //
    // Header (little-endian, 44 bytes): u32 L, u32 N, u32 M, f64 fc, f64 df, f64 Tbar, f64 d.
    // Payload: L*N*M pairs of f64 (re, im) in flattening order.

    namespace detail
    {
        template <typename T>
        void put_le(std::ostream &os, T v)
        {
            static_assert(std::endian::native == std::endian::little, "big-endian hosts not supported");
            os.write(reinterpret_cast<const char *>(&v), sizeof(T));
        }
        template <typename T>
        T get_le(std::istream &is)
        {
            T v{};
            is.read(reinterpret_cast<char *>(&v), sizeof(T));
            return v;
        }
    }

    inline void write_observation(const std::filesystem::path &path, const Observation &obs)
    {
        std::ofstream os(path, std::ios::binary);
        if (!os)
            throw std::runtime_error("cannot open '" + path.string() + "' for writing");
        const auto &c = obs.config();
        detail::put_le<std::uint32_t>(os, std::uint32_t(c.n_antennas));
        detail::put_le<std::uint32_t>(os, std::uint32_t(c.n_subcarriers));
        detail::put_le<std::uint32_t>(os, std::uint32_t(c.n_symbols));
        detail::put_le<double>(os, c.carrier_freq_hz);
        detail::put_le<double>(os, c.subcarrier_spacing_hz);
        detail::put_le<double>(os, c.symbol_period_s());
        detail::put_le<double>(os, c.antenna_spacing_m);
        for (const auto &z : obs.data())
        {
            detail::put_le<double>(os, z.real());
            detail::put_le<double>(os, z.imag());
        }
        if (!os)
            throw std::runtime_error("write error on '" + path.string() + "'");
    }

    // The file does not store T and T_cp separately: T is set to 1/df and T_cp = Tbar - T.
    inline Observation read_observation(const std::filesystem::path &path)
    {
        std::ifstream is(path, std::ios::binary);
        if (!is)
            throw std::runtime_error("cannot open '" + path.string() + "'");
        SystemConfig c;
        c.n_antennas = detail::get_le<std::uint32_t>(is);
        c.n_subcarriers = detail::get_le<std::uint32_t>(is);
        c.n_symbols = detail::get_le<std::uint32_t>(is);
        c.carrier_freq_hz = detail::get_le<double>(is);
        c.subcarrier_spacing_hz = detail::get_le<double>(is);
        const double tbar = detail::get_le<double>(is);
        c.antenna_spacing_m = detail::get_le<double>(is);
        if (!is)
            throw std::runtime_error("'" + path.string() + "': truncated header");
        c.data_duration_s = 1.0 / c.subcarrier_spacing_hz;
        c.cp_duration_s = tbar - c.data_duration_s;
        c.noise_power = 0.0;
        Observation obs(c);
        for (auto &z : obs.data())
        {
            double re = detail::get_le<double>(is);
            double im = detail::get_le<double>(is);
            z = cdouble(re, im);
        }
        if (!is)
            throw std::runtime_error("'" + path.string() + "': truncated payload");
        return obs;
    }
}

#endif
