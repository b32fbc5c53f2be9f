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
    // 1D noise subspace of a noiseless cube along one dim
    CMat noise_1d(const Observation &obs, Dim d, std::size_t D, std::size_t U)
    {
        return eig_split(smoothed_covariance(obs, window_shape({d}, {D})), U).E_n;
    }
}

TEST_CASE("root polynomial of the identity is constant on the circle and degenerate")
{
    const auto p = build_root_polynomial(CMat::Identity(2, 2));
    REQUIRE(p.coeffs.size() == 3);
    CHECK(p.coeffs[0] == cdouble(0, 0));
    CHECK(p.coeffs[1] == cdouble(2, 0));
    CHECK(p.coeffs[2] == cdouble(0, 0));
    CHECK(p.degenerate);
    CHECK(p.on_circle(0.3) == Approx(2.0));
    CHECK(p.on_circle(-2.1) == Approx(2.0));
}

TEST_CASE("root polynomial coefficients are diagonal sums and conjugate symmetric")
{
    Rng rng(1);
    const CMat Q = test::random_orthonormal(7, 4, rng);
    const auto p = build_root_polynomial(Q);
    const CMat C = Q * Q.adjoint();
    const Eigen::Index D = 7;
    for (Eigen::Index k = 0; k < 2 * D - 1; ++k)
    {
        CHECK(std::abs(p.coeffs[k] - std::conj(p.coeffs[2 * D - 2 - k])) < 1e-14);
        cdouble s(0, 0);
        const Eigen::Index off = k - (D - 1);
        for (Eigen::Index r = 0; r < D; ++r)
            if (r + off >= 0 && r + off < D)
                s += C(r, r + off);
        CHECK(std::abs(p.coeffs[k] - s) < 1e-14);
    }
    // on the circle |g| equals a^H C a
    for (double ph : {-2.0, -0.4, 0.0, 1.3, 3.0})
    {
        const CVec a = phase_ramp(ph, 7);
        CHECK(p.on_circle(ph) == Approx((Q.adjoint() * a).squaredNorm()).epsilon(1e-12));
    }
}

TEST_CASE("roots of random Hermitian polynomials come in conjugate-reciprocal pairs")
{
    Rng rng(2);
    for (int k = 0; k < 20; ++k)
    {
        const CMat Q = test::random_orthonormal(6, 3, rng);
        const auto p = build_root_polynomial(Q);
        const auto roots = polynomial_roots(p.coeffs);
        CHECK(roots.size() == 10);
        const double l1 = p.coeffs.cwiseAbs().sum();
        for (const auto &z : roots)
        {
            CHECK(std::abs(p.evaluate(z)) <= 1e-8 * l1 * std::max(1.0, std::pow(std::abs(z), 10)));
            const cdouble mirror = 1.0 / std::conj(z);
            double best = std::numeric_limits<double>::infinity();
            for (const auto &w : roots)
                best = std::min(best, std::abs(w - mirror));
            CHECK(best <= 1e-6 * std::max(1.0, std::abs(mirror)));
        }
    }
}

TEST_CASE("noiseless single target root polynomial vanishes at the true rotation")
{
    const SystemConfig c = test::small_config();
    const Target t = test::target(14, 66, -9);
    const auto obs = noiseless_observation(c, {t});
    for (Dim d : kAllDims)
    {
        const auto p = build_root_polynomial(noise_1d(obs, d, 4, 1), d);
        const double ph = phase_of(c, d, target_param(t, d));
        CHECK(std::abs(p.evaluate(std::polar(1.0, ph))) < 1e-12);
        const auto est = roots_to_params(p, 1, d, c);
        CHECK(est[0] == Approx(target_param(t, d)).margin(1e-6));
    }
}

TEST_CASE("root-to-parameter mapping")
{
    const SystemConfig c;
    for (Dim d : kAllDims)
        CHECK(param_from_phase(c, d, 0.0) == 0.0);
    CHECK(param_from_phase(c, Dim::range, -0.30410) == Approx(60.5).margin(2e-3));
    CHECK(param_from_phase(c, Dim::range, phase_of(c, Dim::range, 60.5)) == Approx(60.5).epsilon(1e-12));
    // quarter-wavelength spacing: azimuth phases beyond pi/2 have no arcsine
    SystemConfig wide = c;
    wide.antenna_spacing_m = c.wavelength_m() / 4.0;
    CHECK_THROWS_WITH(param_from_phase(wide, Dim::azimuth, 2.0), Catch::Matchers::ContainsSubstring("non-physical root"));
}

TEST_CASE("roots_to_params round trip on valid parameters")
{
    const SystemConfig c;
    Rng rng(3);
    for (int k = 0; k < 30; ++k)
    {
        const Target t = test::random_target(c, rng);
        for (Dim d : kAllDims)
            CHECK(param_from_phase(c, d, phase_of(c, d, target_param(t, d))) == Approx(target_param(t, d)).margin(1e-9));
    }
}

TEST_CASE("too few candidate roots is an error")
{
    const auto p = build_root_polynomial(CMat::Identity(2, 2));
    CHECK_THROWS_AS(roots_to_params(p, 1, Dim::range, SystemConfig{}), EstimationError);
    CHECK_THROWS_AS(roots_to_params(p, 2, Dim::range, SystemConfig{}), std::invalid_argument);
}

TEST_CASE("noiseless reference scenario range roots recover the true ranges")
{
    const SystemConfig c;
    const auto obs = noiseless_observation(c, reference_targets());
    const auto p = build_root_polynomial(noise_1d(obs, Dim::range, 40, 3), Dim::range);
    auto r = roots_to_params(p, 3, Dim::range, c);
    std::sort(r.begin(), r.end());
    CHECK(r[0] == Approx(39.73).margin(1e-6));
    CHECK(r[1] == Approx(60.5).margin(1e-6));
    CHECK(r[2] == Approx(80.21).margin(1e-6));
}

TEST_CASE("1D estimates do not depend on the other two parameters")
{
    const SystemConfig c = test::small_config();
    Rng rng(4);
    std::vector<double> r_est;
    for (int k = 0; k < 6; ++k)
    {
        Target t = test::random_target(c, rng);
        t.range_m = 123.4;
        const auto obs = noiseless_observation(c, {t});
        r_est.push_back(roots_to_params(build_root_polynomial(noise_1d(obs, Dim::range, 12, 1)), 1, Dim::range, c)[0]);
    }
    for (double r : r_est)
        CHECK(std::abs(r - r_est[0]) < 1e-9);
}

TEST_CASE("pairing with one target is the rank-one least-squares fit")
{
    const SystemConfig c = test::small_config();
    const Target t = test::target(5, 40, 3, std::polar(0.8, -0.6));
    const auto sc = make_scenario(c, {t}, 10.0);
    const CVec z = flatten(synthesize(sc, 5));
    const auto out = pair_mle(z, {t.azimuth_deg}, {t.range_m}, {t.velocity_mps}, c);
    const CVec a = steering(c, t).a_full;
    CHECK(std::abs(out.alpha_hat[0] - a.dot(z) / double(c.size())) < 1e-12);
    CHECK(out.residual == Approx((z - out.alpha_hat[0] * a).squaredNorm()).epsilon(1e-10));
    CHECK_FALSE(out.ambiguous);
}

TEST_CASE("pairing recovers the true matching from shuffled lists")
{
    const SystemConfig c;
    const auto tg = reference_targets();
    const CVec z = flatten(noiseless_observation(c, tg));
    std::vector<double> th, r, v;
    for (const auto &t : tg)
    {
        th.push_back(t.azimuth_deg);
        r.push_back(t.range_m);
        v.push_back(t.velocity_mps);
    }
    Rng rng(6);
    for (int k = 0; k < 6; ++k)
    {
        std::shuffle(r.begin(), r.end(), rng);
        std::shuffle(v.begin(), v.end(), rng);
        const auto out = pair_mle(z, th, r, v, c);
        CHECK(out.residual <= 1e-9 * z.squaredNorm());
        for (std::size_t i = 0; i < 3; ++i)
        {
            CHECK(out.triplets[i].theta_deg == tg[i].azimuth_deg);
            CHECK(out.triplets[i].range_m == tg[i].range_m);
            CHECK(out.triplets[i].velocity_mps == tg[i].velocity_mps);
        }
    }
}

TEST_CASE("selected pairing beats every other enumerated pairing")
{
    const SystemConfig c = test::small_config();
    Rng rng(7);
    std::vector<Target> tg{test::random_target(c, rng), test::random_target(c, rng), test::random_target(c, rng)};
    const CVec z = flatten(synthesize(make_scenario(c, tg, 0.0), 8));
    std::vector<double> th, r, v;
    for (const auto &t : tg)
    {
        th.push_back(t.azimuth_deg);
        r.push_back(t.range_m + 1.0);
        v.push_back(t.velocity_mps - 0.5);
    }
    const auto out = pair_mle(z, th, r, v, c);
    // independent enumeration with a dense least-squares solve
    std::vector<std::size_t> pr = {0, 1, 2}, pv = {0, 1, 2};
    do
        do
        {
            std::vector<Target> cand;
            for (std::size_t i = 0; i < 3; ++i)
                cand.push_back(test::target(th[i], r[pr[i]], v[pv[i]]));
            const CMat A = manifold(c, cand).A;
            const CVec al = A.colPivHouseholderQr().solve(z);
            CHECK(out.residual <= (z - A * al).squaredNorm() * (1 + 1e-9));
        } while (std::next_permutation(pv.begin(), pv.end()));
    while (std::next_permutation(pr.begin(), pr.end()));
}

TEST_CASE("identical azimuths tie and are flagged")
{
    const SystemConfig c = test::small_config();
    const std::vector<Target> tg = {test::target(10, 40, 5), test::target(10, 120, -20)};
    const CVec z = flatten(noiseless_observation(c, tg));
    const auto out = pair_mle(z, {10, 10}, {40, 120}, {5, -20}, c);
    CHECK(out.ambiguous);
    // first-index order wins the tie
    CHECK(out.triplets[0].range_m == 40);
    CHECK(out.triplets[1].range_m == 120);
}

TEST_CASE("pairing input guards")
{
    const SystemConfig c = test::small_config();
    const CVec z = CVec::Zero(Eigen::Index(c.size()));
    CHECK_THROWS_AS(pair_mle(z, {}, {}, {}, c), std::invalid_argument);
    CHECK_THROWS_AS(pair_mle(z, {1, 2}, {1}, {1, 2}, c), std::invalid_argument);
    const std::vector<double> seven(7, 0.0);
    CHECK_THROWS_AS(pair_mle(z, seven, seven, seven, c), std::invalid_argument);
    // all pairings collinear
    CHECK_THROWS_AS(pair_mle(z, {3, 3}, {50, 50}, {2, 2}, c), EstimationError);
}

TEST_CASE("Algorithm 1 on a noiseless single target is exact")
{
    const SystemConfig c = test::small_config();
    const Target t = test::target(-33, 210, 14);
    const auto out = run_algorithm1(noiseless_observation(c, {t}), 1, test::small_smoothing());
    CHECK(out.triplets[0].theta_deg == Approx(t.azimuth_deg).margin(1e-6));
    CHECK(out.triplets[0].range_m == Approx(t.range_m).margin(1e-6));
    CHECK(out.triplets[0].velocity_mps == Approx(t.velocity_mps).margin(1e-6));
}

TEST_CASE("Algorithm 1 on the noiseless reference scenario has a vanishing residual")
{
    const auto obs = noiseless_observation(SystemConfig{}, reference_targets());
    const auto out = run_algorithm1(obs, 3, smoothing_fixed_preset());
    CHECK(out.residual <= 1e-9 * flatten(obs).squaredNorm());
    const auto err = test::max_errors(reference_targets(), out.triplets);
    CHECK(err[0] < 1e-6);
    CHECK(err[1] < 1e-6);
    CHECK(err[2] < 1e-6);
}

TEST_CASE("Algorithm 1 at 10 dB lands inside the Rayleigh basin")
{
    const auto sc = reference_scenario(10.0);
    for (std::uint64_t seed : {1, 2, 3})
    {
        const auto out = run_algorithm1(synthesize(sc, seed), 3, smoothing_fixed_preset(), seed == 2);
        const auto err = test::max_errors(sc.targets, out.triplets);
        CHECK(err[0] < 2.4);
        CHECK(err[1] < 9.77);
        CHECK(err[2] < 8.4);
        CHECK(std::isfinite(out.residual));
    }
}

TEST_CASE("Algorithm 1 rejects windows not above U")
{
    const auto obs = noiseless_observation(test::small_config(), {test::target(0, 10, 0)});
    CHECK_THROWS_AS(run_algorithm1(obs, 4, test::small_smoothing()), std::invalid_argument);
    CHECK_THROWS_AS(run_algorithm1(obs, 1, SmoothingConfig{9, 12, 8}), std::invalid_argument);
}
