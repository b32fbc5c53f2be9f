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

#ifndef JARVE_TESTS_SUPPORT_HPP
#define JARVE_TESTS_SUPPORT_HPP

#include "jarve/bench.hpp"

#include <catch2/catch_amalgamated.hpp>

namespace jarve::test
{
    // Small system used where full dims would be slow
    inline SystemConfig small_config(std::size_t L = 8, std::size_t N = 32, std::size_t M = 16)
    {
        return with_dims(SystemConfig{}, L, N, M);
    }

    inline SmoothingConfig small_smoothing() { return {4, 12, 8}; }

    inline Target target(double th, double r, double v, cdouble a = {1.0, 0.0}) { return {th, r, v, a}; }

    // Random target inside the unambiguous box, away from its edges
    inline Target random_target(const SystemConfig &c, Rng &rng)
    {
        std::uniform_real_distribution<double> th(-60.0, 60.0), r(0.05, 0.9), v(-0.9, 0.9), ph(-kPi, kPi);
        return {th(rng), r(rng) * c.max_range_m(), v(rng) * c.max_speed_mps(), std::polar(1.0, ph(rng))};
    }

    inline CMat random_hermitian(Eigen::Index n, Rng &rng)
    {
        std::normal_distribution<double> g;
        CMat X(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                X(i, j) = cdouble(g(rng), g(rng));
        return 0.5 * (X + X.adjoint());
    }

    // Orthonormal columns spanning a random subspace
    inline CMat random_orthonormal(Eigen::Index rows, Eigen::Index cols, Rng &rng)
    {
        std::normal_distribution<double> g;
        CMat X(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j)
                X(i, j) = cdouble(g(rng), g(rng));
        Eigen::HouseholderQR<CMat> qr(X);
        return qr.householderQ() * CMat::Identity(rows, cols);
    }

    // Largest per-dim absolute error after optimal association
    inline std::array<double, 3> max_errors(const std::vector<Target> &truth, const std::vector<Triplet> &est)
    {
        std::array<double, 3> worst{};
        const auto U = truth.size();
        RMat cost(static_cast<Eigen::Index>(U), static_cast<Eigen::Index>(U));
        for (std::size_t i = 0; i < U; ++i)
            for (std::size_t j = 0; j < U; ++j)
            {
                double s = 0.0;
                for (Dim d : kAllDims)
                    s += std::pow(target_param(truth[i], d) - est[j][d], 2);
                cost(Eigen::Index(i), Eigen::Index(j)) = s;
            }
        const auto perm = detail::best_assignment(cost);
        for (std::size_t i = 0; i < U; ++i)
            for (Dim d : kAllDims)
                worst[index(d)] = std::max(worst[index(d)], std::abs(target_param(truth[i], d) - est[perm[i]][d]));
        return worst;
    }
}

#endif
