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

namespace
{
    Observation random_cube(const SystemConfig &c, std::uint64_t seed)
    {
        Observation obs(c);
        Rng rng(seed);
        std::normal_distribution<double> g;
        for (auto &z : obs.data())
            z = cdouble(g(rng), g(rng));
        return obs;
    }
}

TEST_CASE("antenna-symbol smoothing of a 3 x 4 slice gives four 2 x 3 blocks")
{
    const SystemConfig c = with_dims(SystemConfig{}, 3, 1, 4);
    const auto obs = random_cube(c, 1);
    const auto snap = smooth_2d(obs, {Dim::azimuth, Dim::velocity}, {2, 3});
    REQUIRE(snap.dimension() == 6);
    REQUIRE(snap.count() == 4);
    // snapshot order: antenna offset outer, symbol offset inner
    const std::array<std::pair<std::size_t, std::size_t>, 4> offs = {{{0, 0}, {0, 1}, {1, 0}, {1, 1}}};
    for (std::size_t s = 0; s < 4; ++s)
        for (std::size_t p = 0; p < 2; ++p)
            for (std::size_t q = 0; q < 3; ++q)
                CHECK(snap.data(Eigen::Index(p * 3 + q), Eigen::Index(s)) == obs(offs[s].first + p, 0, offs[s].second + q));
}

TEST_CASE("full-size window yields the flattened cube")
{
    const SystemConfig c = with_dims(SystemConfig{}, 3, 5, 4);
    const auto obs = random_cube(c, 2);
    const auto snap = smooth_3d(obs, {3, 5, 4});
    REQUIRE(snap.count() == 1);
    CHECK(snap.data.col(0) == flatten(obs));
}

TEST_CASE("snapshot counts at full dims")
{
    const Shape3 shape = {16, 128, 80};
    auto count = [&](const Shape3 &w)
    {
        const auto [D, S] = snapshot_dims(shape, w);
        return std::make_pair(D, S);
    };
    CHECK(count({6, 40, 25}) == std::make_pair<std::size_t, std::size_t>(6000, 11 * 89 * 56));
    CHECK(count({1, 40, 1}) == std::make_pair<std::size_t, std::size_t>(40, 16 * 89 * 80));
    CHECK(count({6, 1, 25}) == std::make_pair<std::size_t, std::size_t>(150, 11 * 128 * 56));
    CHECK(11 * 89 * 56 == 54824);
    CHECK(16 * 89 * 80 == 113920);
    CHECK(11 * 128 * 56 == 78848);
}

TEST_CASE("window sizes out of range are rejected")
{
    const auto obs = random_cube(with_dims(SystemConfig{}, 3, 4, 5), 3);
    CHECK_THROWS_AS(smooth_3d(obs, {4, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(smooth_1d(obs, Dim::range, 0), std::invalid_argument);
    CHECK_THROWS_AS(smooth_2d(obs, {Dim::range, Dim::range}, {2, 2}), std::invalid_argument);
    CHECK_THROWS_AS(smooth_3d(obs, {1, 1, 1}, 10), std::length_error);
}

TEST_CASE("1D window over the whole axis uses the other axes as snapshots")
{
    const auto obs = random_cube(with_dims(SystemConfig{}, 3, 4, 5), 4);
    const auto snap = smooth_1d(obs, Dim::range, 4);
    CHECK(snap.dimension() == 4);
    CHECK(snap.count() == 15);
}

TEST_CASE("single-target 1D snapshots are unit-modulus multiples of the window steering")
{
    const SystemConfig c = test::small_config();
    const Target t = test::target(10, 100, 5, std::polar(2.0, 0.4));
    const auto obs = noiseless_observation(c, {t});
    const auto snap = smooth_1d(obs, Dim::range, 12);
    const CVec a = phase_ramp(phase_of(c, Dim::range, t.range_m), 12);
    for (Eigen::Index s = 0; s < Eigen::Index(snap.count()); ++s)
    {
        const cdouble k = snap.data(0, s) / a[0];
        CHECK(std::abs(std::abs(k) - 2.0) < 1e-12);
        CHECK((snap.data.col(s) - k * a).norm() < 1e-12);
    }
}

TEST_CASE("single-target 2D snapshots follow the Kronecker layout")
{
    const SystemConfig c = test::small_config();
    const Target t = test::target(-20, 60, 12);
    const auto obs = noiseless_observation(c, {t});
    const auto snap = smooth_2d(obs, {Dim::azimuth, Dim::velocity}, {4, 8});
    const CVec a = kron(phase_ramp(phase_of(c, Dim::azimuth, t.azimuth_deg), 4), phase_ramp(phase_of(c, Dim::velocity, t.velocity_mps), 8));
    for (Eigen::Index s = 0; s < Eigen::Index(snap.count()); s += 7)
        CHECK((snap.data.col(s) - snap.data(0, s) * a).norm() < 1e-12);
}

TEST_CASE("swapping kept axes permutes rows")
{
    const auto obs = random_cube(with_dims(SystemConfig{}, 4, 3, 5), 5);
    const auto ab = smooth_2d(obs, {Dim::azimuth, Dim::velocity}, {2, 3});
    const auto ba = smooth_2d(obs, {Dim::velocity, Dim::azimuth}, {3, 2});
    REQUIRE(ab.data.rows() == ba.data.rows());
    REQUIRE(ab.data.cols() == ba.data.cols());
    for (std::size_t p = 0; p < 2; ++p)
        for (std::size_t q = 0; q < 3; ++q)
            CHECK(ab.data.row(Eigen::Index(p * 3 + q)) == ba.data.row(Eigen::Index(q * 2 + p)));
}

TEST_CASE("snapshot entries are copies of cube entries")
{
    const auto obs = random_cube(with_dims(SystemConfig{}, 4, 6, 5), 6);
    const auto snap = smooth_3d(obs, {2, 3, 2});
    std::set<std::pair<double, double>> cube;
    for (const auto &z : obs.data())
        cube.insert({z.real(), z.imag()});
    for (Eigen::Index j = 0; j < snap.data.cols(); ++j)
        for (Eigen::Index i = 0; i < snap.data.rows(); ++i)
            CHECK(cube.count({snap.data(i, j).real(), snap.data(i, j).imag()}) == 1);
}

TEST_CASE("snapshot count formulas hold on random small dims")
{
    Rng rng(8);
    std::uniform_int_distribution<std::size_t> dim(1, 7);
    for (int k = 0; k < 40; ++k)
    {
        const SystemConfig c = with_dims(SystemConfig{}, dim(rng), dim(rng), dim(rng));
        const Shape3 sh = c.shape();
        const SmoothingConfig w{std::uniform_int_distribution<std::size_t>(1, sh[0])(rng),
                                std::uniform_int_distribution<std::size_t>(1, sh[1])(rng),
                                std::uniform_int_distribution<std::size_t>(1, sh[2])(rng)};
        const auto snap = smooth_3d(random_cube(c, 9), w);
        const auto cnt = w.snapshot_counts(sh);
        CHECK(snap.count() == cnt[0] * cnt[1] * cnt[2]);
        CHECK(snap.dimension() == w.dimension());
        const auto one = smooth_1d(random_cube(c, 10), Dim::velocity, w.sub_symbols);
        CHECK(one.count() == sh[0] * sh[1] * cnt[2]);
    }
}

TEST_CASE("streaming covariance equals the materialized covariance")
{
    Rng rng(12);
    std::uniform_int_distribution<std::size_t> dim(2, 7);
    for (int k = 0; k < 25; ++k)
    {
        const SystemConfig c = with_dims(SystemConfig{}, dim(rng), dim(rng), dim(rng));
        const Shape3 sh = c.shape();
        Shape3 w;
        for (std::size_t a = 0; a < 3; ++a)
            w[a] = std::uniform_int_distribution<std::size_t>(1, sh[a])(rng);
        const auto obs = random_cube(c, 100 + k);
        std::vector<Dim> kept;
        std::vector<std::size_t> sizes;
        for (Dim d : kAllDims)
            if (w[index(d)] > 1)
            {
                kept.push_back(d);
                sizes.push_back(w[index(d)]);
            }
        if (kept.empty())
            continue;
        const CMat ref = covariance(detail::extract_windows(obs, kept, sizes, kDefaultSnapshotBudget));
        const CMat fast = smoothed_covariance(obs, w);
        CHECK((ref - fast).norm() <= 1e-12 * ref.norm());
    }
}

TEST_CASE("3D smoothing restores full rank for coherent targets")
{
    const SystemConfig c = with_dims(SystemConfig{}, 6, 12, 8);
    const std::vector<Target> tg = {test::target(10, 40, 5), test::target(-15, 90, -12), test::target(30, 150, 20)};
    const auto obs = noiseless_observation(c, tg);
    const CMat R = covariance(smooth_3d(obs, {3, 5, 4}));
    const auto sp = eig_split(R, 3);
    CHECK(sp.eigenvalues[2] > 1e-6 * sp.eigenvalues[0]);
    CHECK(sp.eigenvalues[3] < 1e-10 * sp.eigenvalues[0]);
    // without smoothing the single snapshot has rank one
    const CMat R1 = covariance(smooth_3d(obs, {6, 12, 8}));
    const auto sp1 = eig_split(R1, 1);
    CHECK(sp1.eigenvalues[1] < 1e-10 * sp1.eigenvalues[0]);
}
