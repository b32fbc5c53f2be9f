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

#include "support.hpp"

using namespace jarve;
using Catch::Approx;

namespace
{
    double rel_diff(const RMat &a, const RMat &b) { return (a - b).norm() / b.norm(); }

    // Random small scenario with U well-separated targets
    std::vector<Target> random_targets(const SystemConfig &c, std::size_t U, Rng &rng)
    {
        std::vector<Target> tg;
        std::uniform_real_distribution<double> amp(0.5, 2.0);
        while (tg.size() < U)
        {
            Target t = test::random_target(c, rng);
            t.backscatter *= amp(rng);
            tg.push_back(t);
        }
        return tg;
    }
}

TEST_CASE("manifold derivative of a 1 x 1 x 1 array vanishes")
{
    const SystemConfig c = with_dims(SystemConfig{}, 1, 1, 1);
    CHECK(manifold_derivative(c, {test::target(10, 50, 3)}).norm() == 0.0);
}

TEST_CASE("manifold derivative matches central differences")
{
    const SystemConfig c = test::small_config();
    Rng rng(1);
    const auto tg = random_targets(c, 2, rng);
    const CMat dA = manifold_derivative(c, tg);
    const double h = 1e-6;
    for (std::size_t i = 0; i < 2; ++i)
        for (Dim d : kAllDims)
        {
            // theta is differentiated in radians
            const double step = d == Dim::azimuth ? h * kRadToDeg : h;
            auto plus = tg, minus = tg;
            auto bump = [&](Target &t, double s)
            {
                if (d == Dim::azimuth)
                    t.azimuth_deg += s;
                else if (d == Dim::range)
                    t.range_m += s;
                else
                    t.velocity_mps += s;
            };
            bump(plus[i], step);
            bump(minus[i], -step);
            const CVec fd = (manifold(c, plus).A.col(Eigen::Index(i)) - manifold(c, minus).A.col(Eigen::Index(i))) / (2 * h);
            const CVec an = dA.col(Eigen::Index(index(d) * 2 + i));
            CHECK((an - fd).norm() <= 1e-6 * an.norm());
        }
}

TEST_CASE("azimuth derivative entries have the j l d_theta structure")
{
    const SystemConfig c;
    const auto tg = reference_targets();
    const CMat dA = manifold_derivative(c, tg);
    const CMat A = manifold(c, tg).A;
    const double dth = 2 * kPi * c.antenna_spacing_m * std::cos(20.0 * kDegToRad) / c.wavelength_m();
    for (std::size_t l : {0, 3, 15})
    {
        const auto row = Eigen::Index((l * 128 + 7) * 80 + 11);
        CHECK(std::abs(dA(row, 0) - cdouble(0, 1) * double(l) * dth * A(row, 0)) < 1e-12 * (1 + double(l) * dth));
    }
    CHECK_THROWS_AS(manifold_derivative(c, {test::target(90, 10, 0)}), ConfigError);
}

TEST_CASE("projector and Schur paths agree")
{
    Rng rng(2);
    std::uniform_int_distribution<std::size_t> L(2, 8), N(2, 16), M(2, 8), U(1, 3);
    int done = 0;
    while (done < 50)
    {
        const SystemConfig c = with_dims(SystemConfig{}, L(rng), N(rng), M(rng));
        const auto tg = random_targets(c, U(rng), rng);
        CrbResult a, b;
        try
        {
            a = crb_theorem1(c, tg, 0.3);
        }
        catch (const EstimationError &)
        {
            continue; // unresolvable draw
        }
        b = crb_schur(c, tg, 0.3);
        CHECK(rel_diff(a.crb_matrix, b.crb_matrix) <= 1e-8);
        ++done;
    }
}

TEST_CASE("single-target bound is diagonal and equals the closed forms")
{
    Rng rng(3);
    std::uniform_int_distribution<std::size_t> L(2, 16), N(2, 64), M(2, 32);
    std::uniform_real_distribution<double> snr(-10, 30);
    for (int k = 0; k < 100; ++k)
    {
        const SystemConfig c = with_dims(SystemConfig{}, L(rng), N(rng), M(rng));
        Target t = random_targets(c, 1, rng)[0];
        const double s2 = noise_power_for_snr(snr(rng));
        const auto r = crb_theorem1(c, {t}, s2);
        const RMat &C = r.crb_matrix;
        const double scale = C.diagonal().cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < 3; ++i)
            for (Eigen::Index j = 0; j < 3; ++j)
                if (i != j)
                    CHECK(std::abs(C(i, j)) <= 1e-9 * std::sqrt(C(i, i) * C(j, j)) + 1e-300 * scale);
        const auto cf = crb_single_closed_form(c, t, std::norm(t.backscatter) / s2);
        CHECK(C(0, 0) == Approx(cf.theta).epsilon(1e-9));
        CHECK(C(1, 1) == Approx(cf.range).epsilon(1e-9));
        CHECK(C(2, 2) == Approx(cf.velocity).epsilon(1e-9));
    }
}

TEST_CASE("closed-form azimuth bound at the reference system")
{
    const SystemConfig c;
    const long double pi = 3.141592653589793238462643383279502884L;
    const long double d = pi * std::cos(20.0L * pi / 180.0L);
    const long double oracle = 6.0L / (128.0L * 80.0L * 16.0L * 255.0L * d * d);
    const auto cf = crb_single_closed_form(c, test::target(20, 40, 0), 1.0);
    CHECK(cf.theta == Approx(double(oracle)).epsilon(1e-12));
    CHECK(cf.theta == Approx(1.65e-8).epsilon(0.01));
}

TEST_CASE("closed forms scale as 1/gamma and 1/(L(L^2-1))")
{
    const SystemConfig c = test::small_config();
    const Target t = test::target(10, 50, 3);
    const auto a = crb_single_closed_form(c, t, 1.0), b = crb_single_closed_form(c, t, 8.0);
    CHECK(b.theta == Approx(a.theta / 8));
    CHECK(b.range == Approx(a.range / 8));
    CHECK(b.velocity == Approx(a.velocity / 8));
    CHECK(crb_single_closed_form(c, t, 1e300).theta < 1e-300);
    const auto l4 = crb_single_closed_form(with_dims(c, 4, 32, 16), t, 1.0);
    const auto l8 = crb_single_closed_form(with_dims(c, 8, 32, 16), t, 1.0);
    CHECK(l4.theta / l8.theta == Approx(8.0 * 63.0 / (4.0 * 15.0)));
    CHECK(l4.range == Approx(l8.range * 2.0)); // K_r = L M
    CHECK_THROWS_AS(crb_single_closed_form(with_dims(c, 1, 32, 16), t, 1.0), std::invalid_argument);
}

TEST_CASE("the bound is linear in the noise power")
{
    const SystemConfig c = test::small_config();
    const auto tg = reference_targets();
    const auto a = crb_theorem1(c, tg, 0.2), b = crb_theorem1(c, tg, 0.8);
    CHECK(rel_diff(b.crb_matrix, 4.0 * a.crb_matrix) <= 1e-12);
}

TEST_CASE("reference targets at full dims give a finite symmetric PSD bound")
{
    const auto r = crb_theorem1(SystemConfig{}, reference_targets(), 1.0);
    const RMat &C = r.crb_matrix;
    CHECK(C.allFinite());
    CHECK((C - C.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<RMat> es(C);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    REQUIRE(r.per_target.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
    {
        CHECK(r.per_target[i].theta == C(Eigen::Index(i), Eigen::Index(i)));
        CHECK(r.rcrb[i].range == Approx(std::sqrt(C(Eigen::Index(3 + i), Eigen::Index(3 + i)))));
    }
}

TEST_CASE("Fisher blocks")
{
    const SystemConfig c = test::small_config();
    SECTION("one target: F22 = (2/s2) LNM I")
    {
        const auto f = fisher_blocks(c, {test::target(5, 30, 2)}, 0.5);
        CHECK((f.F22 - (2.0 / 0.5) * double(c.size()) * RMat::Identity(2, 2)).norm() < 1e-9);
    }
    SECTION("closed-form F22 inverse")
    {
        Rng rng(4);
        const auto tg = random_targets(c, 3, rng);
        const auto f = fisher_blocks(c, tg, 0.7);
        const RMat P = f.F22 * f22_inverse(c, tg, 0.7);
        CHECK((P - RMat::Identity(6, 6)).norm() <= 1e-9);
    }
    CHECK_THROWS_AS(fisher_blocks(c, {test::target(5, 30, 2)}, 0.0), std::invalid_argument);
}

TEST_CASE("coincident targets are unresolvable")
{
    const SystemConfig c = test::small_config();
    CHECK_THROWS_WITH(crb_theorem1(c, {test::target(5, 30, 2), test::target(5, 30, 2)}, 1.0),
                      Catch::Matchers::ContainsSubstring("targets unresolvable at this geometry"));
}

TEST_CASE("the bound ignores a common phase rotation of the amplitudes")
{
    const SystemConfig c = test::small_config();
    Rng rng(5);
    for (std::size_t U : {1, 3})
    {
        auto tg = random_targets(c, U, rng);
        const auto a = crb_theorem1(c, tg, 1.0);
        for (auto &t : tg)
            t.backscatter *= std::polar(1.0, 1.234);
        const auto b = crb_theorem1(c, tg, 1.0);
        CHECK(rel_diff(b.crb_matrix, a.crb_matrix) <= 1e-10);
    }
}

TEST_CASE("PI-2DMUSIC does not beat the bound at high SNR")
{
    const SystemConfig c = test::small_config();
    const std::vector<Target> tg = {test::target(15, 60, 8), test::target(-30, 400, -20)};
    const double snr = 20.0;
    const auto crb = crb_theorem1(c, tg, noise_power_for_snr(snr));
    PipelineSettings s;
    s.smoothing = test::small_smoothing();
    const int trials = 200;
    std::array<double, 3> mse0{}, mse1{};
    for (int k = 0; k < trials; ++k)
    {
        Rng rng(derive_seed(5, {std::uint64_t(k)}));
        Scenario sc = make_scenario(c, tg, snr);
        sc.targets = randomize_phases(tg, rng);
        const auto out = run_pi2dmusic(synthesize(sc, rng()), 2, s);
        // match by azimuth: the two targets are 45 deg apart
        const bool swap = std::abs(out.estimates[0].theta_deg - tg[0].azimuth_deg) > std::abs(out.estimates[1].theta_deg - tg[0].azimuth_deg);
        const Triplet &e0 = out.estimates[swap ? 1 : 0], &e1 = out.estimates[swap ? 0 : 1];
        for (Dim d : kAllDims)
        {
            const double scale = d == Dim::azimuth ? kDegToRad : 1.0;
            mse0[index(d)] += std::pow((e0[d] - target_param(tg[0], d)) * scale, 2) / trials;
            mse1[index(d)] += std::pow((e1[d] - target_param(tg[1], d)) * scale, 2) / trials;
        }
    }
    for (std::size_t d = 0; d < 3; ++d)
    {
        const auto U = Eigen::Index(2);
        CHECK(mse0[d] >= 0.8 * crb.crb_matrix(Eigen::Index(d) * U, Eigen::Index(d) * U));
        CHECK(mse1[d] >= 0.8 * crb.crb_matrix(Eigen::Index(d) * U + 1, Eigen::Index(d) * U + 1));
    }
}
