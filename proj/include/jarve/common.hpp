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

#ifndef JARVE_COMMON_HPP
#define JARVE_COMMON_HPP

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace jarve
{
    using cdouble = std::complex<double>;
    using CVec = Eigen::VectorXcd;
    using CMat = Eigen::MatrixXcd;
    using RVec = Eigen::VectorXd;
    using RMat = Eigen::MatrixXd;

    inline constexpr double kSpeedOfLight = 3.0e8; // m/s
    inline constexpr double kPi = std::numbers::pi;
    inline constexpr double kDegToRad = kPi / 180.0;
    inline constexpr double kRadToDeg = 180.0 / kPi;

    // The three estimation dimensions, in cube axis order (antenna, subcarrier, symbol)
    enum class Dim : int
    {
        azimuth = 0,
        range = 1,
        velocity = 2
    };

    inline constexpr std::array<Dim, 3> kAllDims = {Dim::azimuth, Dim::range, Dim::velocity};

    inline constexpr std::size_t index(Dim d) { return static_cast<std::size_t>(d); }

    inline std::string_view to_string(Dim d)
    {
        switch (d)
        {
        case Dim::azimuth:
            return "azimuth";
        case Dim::range:
            return "range";
        case Dim::velocity:
            return "velocity";
        }
        return "?";
    }

    // Accepts parameter names and axis names
    inline std::optional<Dim> parse_dim(std::string_view s)
    {
        if (s == "azimuth" || s == "theta" || s == "antenna")
            return Dim::azimuth;
        if (s == "range" || s == "r" || s == "subcarrier")
            return Dim::range;
        if (s == "velocity" || s == "v" || s == "symbol")
            return Dim::velocity;
        return std::nullopt;
    }

    // Cube extents (L, N, M) or window extents in the same axis order
    using Shape3 = std::array<std::size_t, 3>;

    // Bad configuration or arguments
    class ConfigError : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    // Estimator could not produce a result for the given data
    class EstimationError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // e^{j k phi} for k = 0..n-1
    inline CVec phase_ramp(double phi, std::size_t n)
    {
        CVec v(static_cast<Eigen::Index>(n));
        for (std::size_t k = 0; k < n; ++k)
            v[static_cast<Eigen::Index>(k)] = std::polar(1.0, static_cast<double>(k) * phi);
        return v;
    }

    inline CVec kron(const CVec &a, const CVec &b)
    {
        CVec out(a.size() * b.size());
        for (Eigen::Index i = 0; i < a.size(); ++i)
            out.segment(i * b.size(), b.size()) = a[i] * b;
        return out;
    }

    // Columnwise Kronecker product
    inline CMat khatri_rao(const CMat &a, const CMat &b)
    {
        if (a.cols() != b.cols())
            throw std::invalid_argument("khatri_rao: column counts differ");
        CMat out(a.rows() * b.rows(), a.cols());
        for (Eigen::Index c = 0; c < a.cols(); ++c)
            out.col(c) = kron(a.col(c), b.col(c));
        return out;
    }
}

#endif
