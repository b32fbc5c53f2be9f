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

#ifndef JARVE_PIPELINE_HPP
#define JARVE_PIPELINE_HPP

#include "jarve/music2d.hpp"

#include <fftw3.h>

#include <mutex>

namespace jarve
{
    enum class RematchMode
    {
        verbatim,  // raw |dr| + |dv|, mixing metres and m/s
        normalized // each difference divided by the full-aperture Rayleigh cell of its dim
    };

    struct PipelineSettings
    {
        SmoothingConfig smoothing = smoothing_fixed_preset();
        LmSettings lm;
        Isu2DOptions isu;
        RematchMode rematch = RematchMode::verbatim;
        bool concurrent = false; // run the 1D roots and the three slices on separate threads
    };

    // Slice indices that produced one final estimate
    struct Provenance
    {
        std::size_t i = 0; // (theta, v) slice
        std::size_t j = 0; // (theta, r) slice
        std::size_t k = 0; // (r, v) slice
        bool tie = false;       // an argmin had two equally close candidates
        bool collision = false; // argmins were not one-to-one; resolved by optimal assignment
        std::array<bool, 3> single_slice{}; // per dim: only one converged slice estimate used
    };

    struct EstimateSet
    {
        std::vector<Triplet> estimates;
        std::vector<Provenance> provenance;
        std::array<Pair2DEstimates, 3> slices; // (theta, v), (theta, r), (r, v); empty for baselines
        InitialTriplets init;
    };

    class PipelineError : public EstimationError
    {
    public:
        PipelineError(const std::string &what, EstimateSet partial)
            : EstimationError(what), partial_(std::move(partial)) {}
        const EstimateSet &partial() const { return partial_; }

    private:
        EstimateSet partial_;
    };

    namespace detail
    {
        // Row-to-column assignment minimizing the summed cost (brute force, n <= 6)
        inline std::vector<std::size_t> best_assignment(const RMat &cost)
        {
            const std::size_t n = std::size_t(cost.rows());
            std::vector<std::size_t> perm(n), best;
            std::iota(perm.begin(), perm.end(), 0);
            double best_cost = std::numeric_limits<double>::infinity();
            do
            {
                double s = 0.0;
                for (std::size_t r = 0; r < n; ++r)
                    s += cost(Eigen::Index(r), Eigen::Index(perm[r]));
                if (s < best_cost)
                {
                    best_cost = s;
                    best = perm;
                }
            } while (std::next_permutation(perm.begin(), perm.end()));
            return best;
        }

        // Per-row argmin with ties to the smallest index; falls back to the optimal assignment
        // when two rows pick the same column
        inline std::vector<std::size_t> argmin_match(const RMat &cost, std::vector<bool> &tie, bool &collision)
        {
            const std::size_t n = std::size_t(cost.rows());
            std::vector<std::size_t> pick(n);
            tie.assign(n, false);
            for (std::size_t r = 0; r < n; ++r)
            {
                std::size_t arg = 0;
                for (std::size_t c = 1; c < n; ++c)
                    if (cost(Eigen::Index(r), Eigen::Index(c)) < cost(Eigen::Index(r), Eigen::Index(arg)))
                        arg = c;
                for (std::size_t c = 0; c < n; ++c)
                    if (c != arg && std::abs(cost(Eigen::Index(r), Eigen::Index(c)) - cost(Eigen::Index(r), Eigen::Index(arg))) <= 1e-12)
                        tie[r] = true;
                pick[r] = arg;
            }
            std::vector<bool> used(n, false);
            collision = false;
            for (auto p : pick)
            {
                collision = collision || used[p];
                used[p] = true;
            }
            if (collision)
                pick = best_assignment(cost);
            return pick;
        }
    }

    // Minimum-distance association of the three slice outputs into 3D estimates.
    // scales (theta, r, v) divide the differences in normalized mode.
    inline EstimateSet rematch(const Pair2DEstimates &tv, const Pair2DEstimates &tr, const Pair2DEstimates &rv,
                               RematchMode mode = RematchMode::verbatim,
                               std::array<double, 3> scales = {1.0, 1.0, 1.0})
    {
        const std::size_t U = tv.pairs.size();
        if (tr.pairs.size() != U || rv.pairs.size() != U)
            throw std::invalid_argument("rematch: slices differ in length");
        if (mode == RematchMode::verbatim)
            scales = {1.0, 1.0, 1.0};
        auto converged = [](const Pair2DEstimates &p, std::size_t i)
        { return p.diagnostics.size() <= i || p.diagnostics[i].converged; };

        RMat cj(static_cast<Eigen::Index>(U), static_cast<Eigen::Index>(U));
        RMat ck(static_cast<Eigen::Index>(U), static_cast<Eigen::Index>(U));
        for (std::size_t i = 0; i < U; ++i)
            for (std::size_t j = 0; j < U; ++j)
                cj(Eigen::Index(i), Eigen::Index(j)) = std::abs(tv.pairs[i].first - tr.pairs[j].first) / scales[0];
        std::vector<bool> tie_j, tie_k;
        bool col_j = false, col_k = false;
        const auto J = detail::argmin_match(cj, tie_j, col_j);
        // Row i of the second match is keyed by the (theta, r) entry j = J[i]
        for (std::size_t i = 0; i < U; ++i)
            for (std::size_t k = 0; k < U; ++k)
                ck(Eigen::Index(i), Eigen::Index(k)) = std::abs(tr.pairs[J[i]].second - rv.pairs[k].first) / scales[1] +
                                                       std::abs(tv.pairs[i].second - rv.pairs[k].second) / scales[2];
        const auto K = detail::argmin_match(ck, tie_k, col_k);

        EstimateSet out;
        out.slices = {tv, tr, rv};
        for (std::size_t i = 0; i < U; ++i)
        {
            const std::size_t j = J[i], k = K[i];
            Provenance pv{i, j, k, tie_j[i] || tie_k[i], col_j || col_k, {}};
            auto mean2 = [&](double x, bool cx, double y, bool cy, bool &single)
            {
                if (cx == cy)
                    return 0.5 * (x + y);
                single = true;
                return cx ? x : y;
            };
            Triplet t;
            t.theta_deg = mean2(tv.pairs[i].first, converged(tv, i), tr.pairs[j].first, converged(tr, j), pv.single_slice[0]);
            t.range_m = mean2(tr.pairs[j].second, converged(tr, j), rv.pairs[k].first, converged(rv, k), pv.single_slice[1]);
            t.velocity_mps = mean2(tv.pairs[i].second, converged(tv, i), rv.pairs[k].second, converged(rv, k), pv.single_slice[2]);
            out.estimates.push_back(t);
            out.provenance.push_back(pv);
        }
        return out;
    }

    inline std::array<double, 3> rayleigh_scales(const SystemConfig &c)
    {
        return {c.azimuth_resolution_deg(), c.range_resolution_m(), c.velocity_resolution_mps()};
    }

    // Root initialization, three 2D slice searches, minimum-distance re-pairing
    inline EstimateSet run_pi2dmusic(const Observation &obs, std::size_t U, const PipelineSettings &s = {})
    {
        const SystemConfig &c = obs.config();
        if (U < 1)
            throw std::invalid_argument("run_pi2dmusic: U must be >= 1");
        for (std::size_t k = 0; k < 3; ++k)
            if (s.smoothing.sub()[k] > c.shape()[k])
                throw std::invalid_argument("smoothing window exceeds array");

        EstimateSet partial;
        try
        {
            partial.init = run_algorithm1(obs, U, s.smoothing, s.concurrent);
        }
        catch (const EstimationError &e)
        {
            throw PipelineError(std::string("initialization failed: ") + e.what(), partial);
        }
        const std::array<std::pair<Dim, Dim>, 3> slice_dims = {
            std::pair{Dim::azimuth, Dim::velocity}, std::pair{Dim::azimuth, Dim::range}, std::pair{Dim::range, Dim::velocity}};
        auto one = [&](std::size_t q)
        {
            return run_isu2dmusic(obs, U, slice_dims[q].first, slice_dims[q].second, s.smoothing, partial.init, s.lm, s.isu);
        };
        std::array<Pair2DEstimates, 3> sl;
        std::string failure;
        if (s.concurrent)
        {
            std::array<std::future<Pair2DEstimates>, 3> fut;
            for (std::size_t q = 0; q < 3; ++q)
                fut[q] = std::async(std::launch::async, one, q);
            for (std::size_t q = 0; q < 3; ++q)
                try
                {
                    sl[q] = fut[q].get();
                }
                catch (const EstimationError &e)
                {
                    failure += e.what();
                }
        }
        else
            for (std::size_t q = 0; q < 3; ++q)
                try
                {
                    sl[q] = one(q);
                }
                catch (const EstimationError &e)
                {
                    failure += e.what();
                }
        if (!failure.empty())
        {
            partial.slices = sl;
            throw PipelineError("slice estimation failed: " + failure, partial);
        }
        EstimateSet out = rematch(sl[0], sl[1], sl[2], s.rematch, rayleigh_scales(c));
        out.init = std::move(partial.init);
        return out;
    }

    // ---------------------------------------------------------------- 3D-DFT baseline

    struct DftSettings
    {
        std::size_t pad_factor = 1;  // zero padding per axis
        bool interpolate = false;    // parabolic refinement of each peak per axis
    };

    namespace detail
    {
        inline std::mutex &fftw_planner_mutex()
        {
            static std::mutex m;
            return m;
        }

        // Bin (plus fractional offset) to parameter
        inline double bin_to_param(const SystemConfig &c, Dim d, double bin, std::size_t K)
        {
            return param_from_phase_clamped(c, d, 2.0 * kPi * bin / double(K));
        }
    }

    // Periodogram peaks of the (optionally zero-padded) 3D DFT
    inline EstimateSet estimate_3d_dft(const Observation &obs, std::size_t U, const DftSettings &ds = {})
    {
        if (ds.pad_factor < 1)
            throw std::invalid_argument("pad factor must be >= 1");
        const SystemConfig &c = obs.config();
        const Shape3 sh = obs.shape();
        const std::size_t K0 = sh[0] * ds.pad_factor, K1 = sh[1] * ds.pad_factor, K2 = sh[2] * ds.pad_factor;
        const std::size_t total = K0 * K1 * K2;

        fftw_complex *buf = fftw_alloc_complex(total);
        if (!buf)
            throw std::bad_alloc();
        std::fill(reinterpret_cast<double *>(buf), reinterpret_cast<double *>(buf) + 2 * total, 0.0);
        fftw_plan plan;
        {
            std::lock_guard<std::mutex> lk(detail::fftw_planner_mutex());
            plan = fftw_plan_dft_3d(int(K0), int(K1), int(K2), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
        }
        for (std::size_t l = 0; l < sh[0]; ++l)
            for (std::size_t n = 0; n < sh[1]; ++n)
                for (std::size_t m = 0; m < sh[2]; ++m)
                {
                    const cdouble z = obs(l, n, m);
                    auto &dst = buf[(l * K1 + n) * K2 + m];
                    dst[0] = z.real();
                    dst[1] = z.imag();
                }
        fftw_execute(plan);
        std::vector<double> mag(total);
        for (std::size_t i = 0; i < total; ++i)
            mag[i] = std::hypot(buf[i][0], buf[i][1]);
        {
            std::lock_guard<std::mutex> lk(detail::fftw_planner_mutex());
            fftw_destroy_plan(plan);
        }
        fftw_free(buf);

        const std::array<std::size_t, 3> K = {K0, K1, K2};
        auto at = [&](long a, long b, long e)
        {
            auto w = [](long x, std::size_t k)
            { return std::size_t((x % long(k) + long(k)) % long(k)); };
            return mag[(w(a, K0) * K1 + w(b, K1)) * K2 + w(e, K2)];
        };
        // Local maxima over the cyclic 26-neighbourhood; plateaus keep their first index
        std::vector<std::size_t> peaks;
        for (std::size_t a = 0; a < K0; ++a)
            for (std::size_t b = 0; b < K1; ++b)
                for (std::size_t e = 0; e < K2; ++e)
                {
                    const double v = mag[(a * K1 + b) * K2 + e];
                    bool is_max = v > 0.0;
                    for (long da = -1; da <= 1 && is_max; ++da)
                        for (long db = -1; db <= 1 && is_max; ++db)
                            for (long de = -1; de <= 1 && is_max; ++de)
                            {
                                if (!da && !db && !de)
                                    continue;
                                const double u = at(long(a) + da, long(b) + db, long(e) + de);
                                const bool earlier = (da < 0) || (da == 0 && (db < 0 || (db == 0 && de < 0)));
                                if (u > v || (earlier && u == v))
                                    is_max = false;
                            }
                    if (is_max)
                        peaks.push_back((a * K1 + b) * K2 + e);
                }
        if (peaks.size() < U)
            throw EstimationError("fewer than U separated periodogram peaks");
        std::stable_sort(peaks.begin(), peaks.end(), [&](std::size_t x, std::size_t y)
                         { return mag[x] > mag[y]; });

        EstimateSet out;
        for (std::size_t u = 0; u < U; ++u)
        {
            const std::size_t p = peaks[u];
            const std::array<long, 3> idx = {long(p / (K1 * K2)), long((p / K2) % K1), long(p % K2)};
            Triplet t;
            for (Dim d : kAllDims)
            {
                const std::size_t ax = index(d);
                double frac = 0.0;
                if (ds.interpolate && K[ax] >= 3)
                {
                    std::array<long, 3> lo = idx, hi = idx;
                    --lo[ax];
                    ++hi[ax];
                    const double ym = at(lo[0], lo[1], lo[2]), y0 = mag[p], yp = at(hi[0], hi[1], hi[2]);
                    const double den = ym - 2.0 * y0 + yp;
                    if (den < 0.0)
                        frac = std::clamp(0.5 * (ym - yp) / den, -0.5, 0.5);
                }
                t[d] = detail::bin_to_param(c, d, double(idx[ax]) + frac, K[ax]);
            }
            out.estimates.push_back(t);
            out.provenance.push_back({u, u, u, false, false, {}});
        }
        return out;
    }

    // ---------------------------------------------------------------- grid MUSIC oracle

    struct GridSpec
    {
        std::vector<double> thetas, ranges, velocities; // deg, m, m/s

        std::size_t points() const { return thetas.size() * ranges.size() * velocities.size(); }
        const std::vector<double> &operator[](Dim d) const
        {
            return d == Dim::azimuth ? thetas : (d == Dim::range ? ranges : velocities);
        }
        std::vector<double> &operator[](Dim d) { return d == Dim::azimuth ? thetas : (d == Dim::range ? ranges : velocities); }
    };

    inline constexpr std::size_t kOracleGridGuard = 10'000'000;

    // Uniform grid values lo, lo + step, ... <= hi
    inline std::vector<double> grid_axis(double lo, double hi, double step)
    {
        if (!(step > 0.0) || hi < lo)
            throw std::invalid_argument("grid_axis: need step > 0 and hi >= lo");
        std::vector<double> v;
        const auto n = std::size_t(std::floor((hi - lo) / step + 1e-9)) + 1;
        for (std::size_t i = 0; i < n; ++i)
            v.push_back(lo + double(i) * step);
        return v;
    }

    // Union of windows center +- half_cells * step per dim, sorted and de-duplicated on the step lattice
    inline GridSpec local_grid(const std::vector<Triplet> &centers, const std::array<double, 3> &steps, std::size_t half_cells)
    {
        GridSpec g;
        for (Dim d : kAllDims)
        {
            std::vector<long long> ticks;
            const double st = steps[index(d)];
            for (const auto &t : centers)
            {
                const long long c0 = std::llround(t[d] / st);
                for (long long k = -(long long)half_cells; k <= (long long)half_cells; ++k)
                    ticks.push_back(c0 + k);
            }
            std::sort(ticks.begin(), ticks.end());
            ticks.erase(std::unique(ticks.begin(), ticks.end()), ticks.end());
            for (auto k : ticks)
                g[d].push_back(double(k) * st);
        }
        return g;
    }

    // MUSIC spectrum 1/G with G = D - |E_s^H a|^2 for unit-modulus a, evaluated at one point
    inline double music_spectrum_3d(const CMat &E_s, const Shape3 &w, const SystemConfig &c, const Triplet &t)
    {
        const CVec a = steering(c, t.theta_deg, t.range_m, t.velocity_mps, w).a_full;
        const double G = std::max(0.0, a.squaredNorm() - (E_s.adjoint() * a).squaredNorm());
        return 1.0 / G;
    }

    struct OracleResult
    {
        EstimateSet set;
        std::vector<double> peak_spectrum; // 1/G at each returned peak
        std::vector<std::array<std::size_t, 3>> peak_index;
        double fixed_seconds = 0.0;  // covariance + EVD
        double search_seconds = 0.0; // spectrum evaluation + peak picking
    };

    // Exhaustive 3D MUSIC search over a product grid (test oracle). With timing_only, a grid
    // holding fewer than U peaks returns what it found instead of throwing.
    inline OracleResult grid_music_oracle(const Observation &obs, std::size_t U, const GridSpec &grid,
                                          const SmoothingConfig &smoothing, std::size_t guard = kOracleGridGuard,
                                          bool timing_only = false)
    {
        using clk = std::chrono::steady_clock;
        const SystemConfig &c = obs.config();
        const std::size_t Gt = grid.thetas.size(), Gr = grid.ranges.size(), Gv = grid.velocities.size();
        if (Gt * Gr * Gv == 0)
            throw std::invalid_argument("grid_music_oracle: empty grid");
        if (Gt * Gr * Gv > guard)
            throw std::length_error("grid_music_oracle: grid of " + std::to_string(Gt * Gr * Gv) +
                                    " points exceeds the guard");
        const Shape3 w = smoothing.sub();
        auto t0 = clk::now();
        const CMat R = smoothed_covariance(obs, w);
        const CMat Es = top_eigenvectors(R, U).E_s;
        auto t1 = clk::now();

        CMat At(static_cast<Eigen::Index>(w[0]), static_cast<Eigen::Index>(Gt));
        CMat Ar(static_cast<Eigen::Index>(w[1]), static_cast<Eigen::Index>(Gr));
        CMat Av(static_cast<Eigen::Index>(w[2]), static_cast<Eigen::Index>(Gv));
        for (std::size_t i = 0; i < Gt; ++i)
            At.col(Eigen::Index(i)) = phase_ramp(phase_of(c, Dim::azimuth, grid.thetas[i]), w[0]);
        for (std::size_t i = 0; i < Gr; ++i)
            Ar.col(Eigen::Index(i)) = phase_ramp(phase_of(c, Dim::range, grid.ranges[i]), w[1]);
        for (std::size_t i = 0; i < Gv; ++i)
            Av.col(Eigen::Index(i)) = phase_ramp(phase_of(c, Dim::velocity, grid.velocities[i]), w[2]);

        // Q(t, r, v) = sum_u |E_u^H a|^2 by contracting symbol, subcarrier, antenna axes in turn
        std::vector<double> Q(Gt * Gr * Gv, 0.0);
        for (Eigen::Index u = 0; u < Es.cols(); ++u)
        {
            // E_u as (M~) x (L~ N~): column (l, n)
            Eigen::Map<const CMat> Eu(Es.col(u).data(), Eigen::Index(w[2]), Eigen::Index(w[0] * w[1]));
            const CMat T1 = Av.transpose() * Eu.conjugate(); // Gv x (l, n)
            CMat T3(static_cast<Eigen::Index>(Gv * Gr), static_cast<Eigen::Index>(Gt));
            for (std::size_t l = 0; l < w[0]; ++l)
            {
                // T2_l(v, r) = sum_n T1(v, (l, n)) Ar(n, r)
                const CMat T2 = T1.middleCols(Eigen::Index(l * w[1]), Eigen::Index(w[1])) * Ar; // Gv x Gr
                const Eigen::Map<const CVec> t2(T2.data(), T2.size());                          // index r*Gv + v
                if (l == 0)
                    T3 = t2 * At.row(0);
                else
                    T3 += t2 * At.row(Eigen::Index(l));
            }
            for (std::size_t it = 0; it < Gt; ++it)
                for (std::size_t ir = 0; ir < Gr; ++ir)
                    for (std::size_t iv = 0; iv < Gv; ++iv)
                        Q[(it * Gr + ir) * Gv + iv] += std::norm(T3(Eigen::Index(ir * Gv + iv), Eigen::Index(it)));
        }
        const double D = double(w[0] * w[1] * w[2]);
        auto Gval = [&](std::size_t i)
        { return std::max(0.0, D - Q[i]); };

        // Local minima of G over the index grid (edges compare only existing neighbours)
        std::vector<std::size_t> peaks;
        for (std::size_t it = 0; it < Gt; ++it)
            for (std::size_t ir = 0; ir < Gr; ++ir)
                for (std::size_t iv = 0; iv < Gv; ++iv)
                {
                    const std::size_t p = (it * Gr + ir) * Gv + iv;
                    const double q = Q[p];
                    bool is_max = true;
                    for (long da = -1; da <= 1 && is_max; ++da)
                        for (long db = -1; db <= 1 && is_max; ++db)
                            for (long de = -1; de <= 1 && is_max; ++de)
                            {
                                if (!da && !db && !de)
                                    continue;
                                const long a = long(it) + da, b = long(ir) + db, e = long(iv) + de;
                                if (a < 0 || b < 0 || e < 0 || a >= long(Gt) || b >= long(Gr) || e >= long(Gv))
                                    continue;
                                const double o = Q[(std::size_t(a) * Gr + std::size_t(b)) * Gv + std::size_t(e)];
                                const bool earlier = (da < 0) || (da == 0 && (db < 0 || (db == 0 && de < 0)));
                                if (o > q || (earlier && o == q))
                                    is_max = false;
                            }
                    if (is_max)
                        peaks.push_back(p);
                }
        if (peaks.size() < U && !timing_only)
            throw EstimationError("grid_music_oracle: fewer than U spectrum peaks");
        std::stable_sort(peaks.begin(), peaks.end(), [&](std::size_t x, std::size_t y)
                         { return Q[x] > Q[y]; });

        OracleResult res;
        for (std::size_t u = 0; u < std::min(U, peaks.size()); ++u)
        {
            const std::size_t p = peaks[u];
            const std::array<std::size_t, 3> ix = {p / (Gr * Gv), (p / Gv) % Gr, p % Gv};
            res.set.estimates.push_back({grid.thetas[ix[0]], grid.ranges[ix[1]], grid.velocities[ix[2]]});
            res.set.provenance.push_back({u, u, u, false, false, {}});
            res.peak_index.push_back(ix);
            res.peak_spectrum.push_back(1.0 / Gval(p));
        }
        auto t2 = clk::now();
        res.fixed_seconds = std::chrono::duration<double>(t1 - t0).count();
        res.search_seconds = std::chrono::duration<double>(t2 - t1).count();
        return res;
    }
}

#endif
