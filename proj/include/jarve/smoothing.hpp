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

#ifndef JARVE_SMOOTHING_HPP
#define JARVE_SMOOTHING_HPP

#include "jarve/signal.hpp"

#include <vector>

namespace jarve
{
    // Snapshots as columns. Rows follow the window layout of kept_dims (first kept dim outer),
    // columns enumerate window offsets with the antenna offset outermost and the symbol offset innermost.
    struct SnapshotMatrix
    {
        CMat data;
        std::vector<Dim> kept_dims;
        std::vector<std::size_t> sub_sizes;
        SystemConfig source_config;

        std::size_t dimension() const { return std::size_t(data.rows()); }
        std::size_t count() const { return std::size_t(data.cols()); }
    };

    // Materialized snapshot matrices larger than this many entries are refused
    inline constexpr std::size_t kDefaultSnapshotBudget = std::size_t(1) << 26;

    // Window extents (1 on axes that are only used as snapshots) for a set of kept dims
    inline Shape3 window_shape(const std::vector<Dim> &kept, const std::vector<std::size_t> &sizes)
    {
        if (kept.size() != sizes.size())
            throw std::invalid_argument("window_shape: dims and sizes differ in length");
        Shape3 w = {1, 1, 1};
        std::array<bool, 3> seen{};
        for (std::size_t k = 0; k < kept.size(); ++k)
        {
            if (seen[index(kept[k])])
                throw std::invalid_argument("kept dims must be distinct");
            seen[index(kept[k])] = true;
            w[index(kept[k])] = sizes[k];
        }
        return w;
    }

    inline Shape3 window_for_dim(const SmoothingConfig &s, Dim d) { return window_shape({d}, {s.sub(d)}); }

    inline Shape3 window_for_slice(const SmoothingConfig &s, Dim a, Dim b)
    {
        return window_shape({a, b}, {s.sub(a), s.sub(b)});
    }

    inline void check_window(const Shape3 &w, const Shape3 &shape)
    {
        for (std::size_t k = 0; k < 3; ++k)
            if (w[k] < 1 || w[k] > shape[k])
                throw std::invalid_argument("smoothing window exceeds array along " + std::string(to_string(kAllDims[k])));
    }

    // (D, S) for a window without building anything
    inline std::pair<std::size_t, std::size_t> snapshot_dims(const Shape3 &shape, const Shape3 &w)
    {
        check_window(w, shape);
        return {w[0] * w[1] * w[2], (shape[0] - w[0] + 1) * (shape[1] - w[1] + 1) * (shape[2] - w[2] + 1)};
    }

    namespace detail
    {
        inline SnapshotMatrix extract_windows(const Observation &obs, const std::vector<Dim> &kept,
                                              const std::vector<std::size_t> &sizes, std::size_t budget)
        {
            const Shape3 shape = obs.shape();
            const Shape3 w = window_shape(kept, sizes);
            auto [D, S] = snapshot_dims(shape, w);
            if (D * S > budget)
                throw std::length_error("snapshot matrix of " + std::to_string(D) + " x " + std::to_string(S) +
                                        " exceeds the materialization budget; use smoothed_covariance");

            // Row offsets in kept-dim order (first kept dim outer)
            std::vector<Shape3> offs(1, Shape3{0, 0, 0});
            for (std::size_t k = 0; k < kept.size(); ++k)
            {
                std::vector<Shape3> next;
                next.reserve(offs.size() * sizes[k]);
                for (const auto &o : offs)
                    for (std::size_t t = 0; t < sizes[k]; ++t)
                    {
                        Shape3 x = o;
                        x[index(kept[k])] = t;
                        next.push_back(x);
                    }
                offs.swap(next);
            }

            SnapshotMatrix out;
            out.data.resize(Eigen::Index(D), Eigen::Index(S));
            out.kept_dims = kept;
            out.sub_sizes = sizes;
            out.source_config = obs.config();
            const Shape3 cnt = {shape[0] - w[0] + 1, shape[1] - w[1] + 1, shape[2] - w[2] + 1};
            Eigen::Index col = 0;
            for (std::size_t sl = 0; sl < cnt[0]; ++sl)
                for (std::size_t sn = 0; sn < cnt[1]; ++sn)
                    for (std::size_t sm = 0; sm < cnt[2]; ++sm, ++col)
                        for (std::size_t r = 0; r < D; ++r)
                            out.data(Eigen::Index(r), col) = obs(sl + offs[r][0], sn + offs[r][1], sm + offs[r][2]);
            return out;
        }
    }

    inline SnapshotMatrix smooth_3d(const Observation &obs, const SmoothingConfig &cfg,
                                    std::size_t budget = kDefaultSnapshotBudget)
    {
        return detail::extract_windows(obs, {Dim::azimuth, Dim::range, Dim::velocity},
                                       {cfg.sub_antennas, cfg.sub_subcarriers, cfg.sub_symbols}, budget);
    }

    inline SnapshotMatrix smooth_1d(const Observation &obs, Dim axis, std::size_t sub_size,
                                    std::size_t budget = kDefaultSnapshotBudget)
    {
        return detail::extract_windows(obs, {axis}, {sub_size}, budget);
    }

    inline SnapshotMatrix smooth_2d(const Observation &obs, std::pair<Dim, Dim> kept, std::pair<std::size_t, std::size_t> sizes,
                                    std::size_t budget = kDefaultSnapshotBudget)
    {
        if (kept.first == kept.second)
            throw std::invalid_argument("smooth_2d: kept axes must differ");
        return detail::extract_windows(obs, {kept.first, kept.second}, {sizes.first, sizes.second}, budget);
    }

    // Covariance (1/S) sum_s b_s b_s^H of the windowed snapshots without materializing them.
    // Rows and columns use the canonical window layout (antenna outer, symbol inner).
    //
    // Entry (p, q) only depends on the lag p - q; for every lag the cube is multiplied with its
    // shifted conjugate once and the per-window sums are read off running box sums.
    inline CMat smoothed_covariance(const Observation &obs, const Shape3 &w)
    {
        const Shape3 shape = obs.shape();
        auto [Dsz, Ssz] = snapshot_dims(shape, w);
        const std::size_t L = shape[0], N = shape[1], M = shape[2];
        const Shape3 cnt = {L - w[0] + 1, N - w[1] + 1, M - w[2] + 1};
        const double inv_s = 1.0 / double(Ssz);

        std::vector<double> zr(obs.size()), zi(obs.size());
        for (std::size_t k = 0; k < obs.size(); ++k)
        {
            zr[k] = obs.data()[k].real();
            zi[k] = obs.data()[k].imag();
        }

        CMat R(static_cast<Eigen::Index>(Dsz), static_cast<Eigen::Index>(Dsz));
        auto row = [&](std::size_t il, std::size_t in, std::size_t im)
        { return Eigen::Index((il * w[1] + in) * w[2] + im); };

        std::vector<double> tr, ti, ur, ui;
        const long wl = long(w[0]), wn = long(w[1]), wm = long(w[2]);
        for (long dl = 0; dl < wl; ++dl)
            for (long dn = (dl == 0 ? 0 : -(wn - 1)); dn < wn; ++dn)
                for (long dm = (dl == 0 && dn == 0 ? 0 : -(wm - 1)); dm < wm; ++dm)
                {
                    // Product region along each axis: k in [lo, hi) with k and k + delta inside the cube
                    const long lo_l = std::max(0L, -dl), lo_n = std::max(0L, -dn), lo_m = std::max(0L, -dm);
                    const std::size_t El = L - std::size_t(std::abs(dl)), En = N - std::size_t(std::abs(dn)),
                                      Em = M - std::size_t(std::abs(dm));
                    // Axes with a unit window are summed out while forming the product
                    const std::size_t Tl = (w[0] == 1 ? 1 : El), Tn = (w[1] == 1 ? 1 : En);
                    tr.assign(Tl * Tn * Em, 0.0);
                    ti.assign(Tl * Tn * Em, 0.0);
                    for (std::size_t kl = 0; kl < El; ++kl)
                        for (std::size_t kn = 0; kn < En; ++kn)
                        {
                            const std::size_t b = ((kl + std::size_t(lo_l)) * N + kn + std::size_t(lo_n)) * M + std::size_t(lo_m);
                            const std::size_t a = b + std::size_t((dl * long(N) + dn) * long(M) + dm);
                            const double *ar = &zr[a], *ai = &zi[a], *br = &zr[b], *bi = &zi[b];
                            const std::size_t t0 = ((w[0] == 1 ? 0 : kl) * Tn + (w[1] == 1 ? 0 : kn)) * Em;
                            double *pr = &tr[t0], *pi = &ti[t0];
                            for (std::size_t km = 0; km < Em; ++km)
                            {
                                pr[km] += ar[km] * br[km] + ai[km] * bi[km];
                                pi[km] += ai[km] * br[km] - ar[km] * bi[km];
                            }
                        }

                    // Box sums of length cnt along each windowed axis; Q = w - |delta| outputs per axis
                    const std::size_t Ql = std::size_t(wl - std::abs(dl)), Qn = std::size_t(wn - std::abs(dn)),
                                      Qm = std::size_t(wm - std::abs(dm));
                    auto box = [](const std::vector<double> &in, std::vector<double> &out, std::size_t outer,
                                  std::size_t len, std::size_t inner, std::size_t q, std::size_t s)
                    {
                        out.assign(outer * q * inner, 0.0);
                        for (std::size_t o = 0; o < outer; ++o)
                            for (std::size_t i = 0; i < inner; ++i)
                            {
                                const double *src = &in[o * len * inner + i];
                                double *dst = &out[o * q * inner + i];
                                double acc = 0.0;
                                for (std::size_t t = 0; t < s; ++t)
                                    acc += src[t * inner];
                                dst[0] = acc;
                                for (std::size_t j = 1; j < q; ++j)
                                {
                                    acc += src[(j + s - 1) * inner] - src[(j - 1) * inner];
                                    dst[j * inner] = acc;
                                }
                            }
                    };
                    std::size_t cl = Tl, cn = Tn, cm = Em;
                    box(tr, ur, cl * cn, cm, 1, Qm, cnt[2]);
                    box(ti, ui, cl * cn, cm, 1, Qm, cnt[2]);
                    tr.swap(ur), ti.swap(ui);
                    cm = Qm;
                    if (w[1] > 1)
                    {
                        box(tr, ur, cl, cn, cm, Qn, cnt[1]);
                        box(ti, ui, cl, cn, cm, Qn, cnt[1]);
                        tr.swap(ur), ti.swap(ui);
                        cn = Qn;
                    }
                    if (w[0] > 1)
                    {
                        box(tr, ur, 1, cl, cn * cm, Ql, cnt[0]);
                        box(ti, ui, 1, cl, cn * cm, Ql, cnt[0]);
                        tr.swap(ur), ti.swap(ui);
                        cl = Ql;
                    }

                    for (std::size_t ql = 0; ql < Ql; ++ql)
                        for (std::size_t qn = 0; qn < Qn; ++qn)
                            for (std::size_t qm = 0; qm < Qm; ++qm)
                            {
                                const std::size_t sl = ql + std::size_t(lo_l), sn = qn + std::size_t(lo_n), sm = qm + std::size_t(lo_m);
                                const std::size_t t = (ql * cn + qn) * cm + qm;
                                const cdouble v(tr[t] * inv_s, ti[t] * inv_s);
                                const Eigen::Index p = row(sl + std::size_t(dl), sn + std::size_t(dn), sm + std::size_t(dm));
                                const Eigen::Index q = row(sl, sn, sm);
                                R(p, q) = v;
                                R(q, p) = std::conj(v);
                            }
                }
        for (Eigen::Index i = 0; i < R.rows(); ++i)
            R(i, i) = cdouble(R(i, i).real(), 0.0);
        return R;
    }

    inline CMat smoothed_covariance(const Observation &obs, const SmoothingConfig &cfg)
    {
        return smoothed_covariance(obs, cfg.sub());
    }
}

#endif
