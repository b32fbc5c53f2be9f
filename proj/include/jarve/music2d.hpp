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

#ifndef JARVE_MUSIC2D_HPP
#define JARVE_MUSIC2D_HPP

#include "jarve/init1d.hpp"

namespace jarve
{
    struct LmSettings
    {
        std::size_t q_max = 100;
        double eps1 = 1e-10; // gradient tolerance
        double eps2 = 1e-10; // step tolerance
        double tau = 1e-3;   // initial damping scale

        void check() const
        {
            if (q_max < 1 || !(eps1 > 0.0) || !(eps2 > 0.0) || !(tau > 0.0))
                throw ConfigError("LM settings must all be positive");
        }
    };

    // Point on the torus of two unit-modulus rotation factors, held by their phases
    struct Kappa2D
    {
        double phase_a = 0.0;
        double phase_b = 0.0;

        cdouble kappa_a() const { return std::polar(1.0, phase_a); }
        cdouble kappa_b() const { return std::polar(1.0, phase_b); }
    };

    // Window lengths (D_a, D_b) of the two active dims, first one outer in the Kronecker layout
    struct SliceDims
    {
        std::size_t a = 1;
        std::size_t b = 1;
        std::size_t size() const { return a * b; }
    };

    inline CVec slice_steering(const Kappa2D &k, const SliceDims &d)
    {
        return kron(phase_ramp(k.phase_a, d.a), phase_ramp(k.phase_b, d.b));
    }

    namespace detail
    {
        // a, da/dphi_a, da/dphi_b
        inline void slice_steering_derivs(const Kappa2D &k, const SliceDims &d, CVec &a, CVec &da, CVec &db)
        {
            a = slice_steering(k, d);
            da.resize(a.size());
            db.resize(a.size());
            const cdouble j(0.0, 1.0);
            for (std::size_t p = 0; p < d.a; ++p)
                for (std::size_t q = 0; q < d.b; ++q)
                {
                    const Eigen::Index i = Eigen::Index(p * d.b + q);
                    da[i] = j * double(p) * a[i];
                    db[i] = j * double(q) * a[i];
                }
        }

        inline void check_rows(std::size_t rows, const SliceDims &d)
        {
            if (rows != d.size())
                throw std::invalid_argument("noise subspace rows must equal D_a * D_b");
        }
    }

    // G = a^H P a
    inline double null_spectrum(const NoiseSubspace &P, const Kappa2D &k, const SliceDims &d)
    {
        detail::check_rows(P.dim(), d);
        return P.project(slice_steering(k, d)).squaredNorm();
    }

    inline double null_spectrum(const CMat &E_n, const Kappa2D &k, const SliceDims &d)
    {
        if (E_n.cols() == 0)
            return 0.0;
        detail::check_rows(std::size_t(E_n.rows()), d);
        return (E_n.adjoint() * slice_steering(k, d)).squaredNorm();
    }

    // J = sqrt(2) E_n^H [da/dphi_a, da/dphi_b]
    inline CMat jacobian(const CMat &E_n, const Kappa2D &k, const SliceDims &d)
    {
        detail::check_rows(std::size_t(E_n.rows()), d);
        CVec a, da, db;
        detail::slice_steering_derivs(k, d, a, da, db);
        CMat J(E_n.cols(), 2);
        J.col(0) = std::sqrt(2.0) * (E_n.adjoint() * da);
        J.col(1) = std::sqrt(2.0) * (E_n.adjoint() * db);
        return J;
    }

    // g = sqrt(2) E_n^H a, so that G = g^H g / 2
    inline CVec residual_vector(const CMat &E_n, const Kappa2D &k, const SliceDims &d)
    {
        return std::sqrt(2.0) * (E_n.adjoint() * slice_steering(k, d));
    }

    enum class LmStop
    {
        gradient,
        step,
        max_iterations
    };

    struct LmDiagnostics
    {
        std::size_t iterations = 0;
        std::size_t rejected = 0;
        double final_G = 0.0;
        bool converged = false;
        LmStop stop = LmStop::max_iterations;
        double final_gradient = 0.0;     // |Re J^H g|_inf at the returned point
        std::vector<double> accepted_G;  // G at the start point and after every accepted step
    };

    struct LmResult
    {
        Kappa2D kappa;
        LmDiagnostics diag;
    };

    namespace detail
    {
        struct LmModel
        {
            double G = 0.0;
            Eigen::Vector2d grad = Eigen::Vector2d::Zero(); // Re{J^H g}
            Eigen::Matrix2d H = Eigen::Matrix2d::Zero();    // Re{J^H J}
        };

        inline LmModel lm_model(const NoiseSubspace &P, const Kappa2D &k, const SliceDims &d)
        {
            CVec a, da, db;
            slice_steering_derivs(k, d, a, da, db);
            CMat X(a.size(), 3);
            X.col(0) = a;
            X.col(1) = da;
            X.col(2) = db;
            // P is a projector, so X^H P X = (PX)^H (PX); this form keeps G accurate near zero
            const CMat PX = P.project(X);
            const CMat Gm = PX.adjoint() * PX;
            LmModel m;
            m.G = std::max(0.0, Gm(0, 0).real());
            m.grad << 2.0 * Gm(1, 0).real(), 2.0 * Gm(2, 0).real();
            m.H << 2.0 * Gm(1, 1).real(), 2.0 * Gm(1, 2).real(), 2.0 * Gm(2, 1).real(), 2.0 * Gm(2, 2).real();
            m.H(0, 1) = m.H(1, 0) = 0.5 * (m.H(0, 1) + m.H(1, 0));
            return m;
        }

        inline double spectrum_only(const NoiseSubspace &P, const Kappa2D &k, const SliceDims &d)
        {
            return P.project(slice_steering(k, d)).squaredNorm();
        }
    }

    // Damped Gauss-Newton descent of G over the two phases
    inline LmResult lm_minimize(const NoiseSubspace &P, const Kappa2D &kappa0, const LmSettings &s, const SliceDims &d)
    {
        s.check();
        detail::check_rows(P.dim(), d);
        if (!std::isfinite(kappa0.phase_a) || !std::isfinite(kappa0.phase_b))
            throw std::invalid_argument("lm_minimize: non-finite start point");

        const double kappa_norm = std::sqrt(2.0); // two unit-modulus entries
        LmResult r;
        r.kappa = kappa0;
        auto m = detail::lm_model(P, r.kappa, d);
        r.diag.accepted_G.push_back(m.G);
        bool found = m.grad.cwiseAbs().maxCoeff() <= s.eps1;
        if (found)
            r.diag.stop = LmStop::gradient;
        double mu = s.tau * m.H.diagonal().maxCoeff();
        if (!(mu > 0.0))
            mu = s.tau;
        double nu = 2.0;
        std::size_t q = 0;
        while (!found && q < s.q_max)
        {
            ++q;
            Eigen::Matrix2d A = m.H + mu * Eigen::Matrix2d::Identity();
            const double det = A.determinant();
            if (!std::isfinite(det) || std::abs(det) <= std::numeric_limits<double>::min())
                throw EstimationError("lm_minimize: damped system singular (non-finite input?)");
            const Eigen::Vector2d h = -A.inverse() * m.grad;
            if (!h.allFinite())
                throw EstimationError("lm_minimize: non-finite step");
            if (h.norm() <= s.eps2 * (kappa_norm + s.eps2))
            {
                found = true;
                r.diag.stop = LmStop::step;
                break;
            }
            const Kappa2D next{r.kappa.phase_a + h[0], r.kappa.phase_b + h[1]};
            const double Gn = detail::spectrum_only(P, next, d);
            const double denom = 0.5 * h.dot(mu * h - m.grad);
            const double rho = (m.G - Gn) / denom;
            if (rho > 0.0)
            {
                r.kappa = {wrap_pi(next.phase_a), wrap_pi(next.phase_b)};
                m = detail::lm_model(P, r.kappa, d);
                m.G = Gn; // keep the value the gain ratio was judged on
                r.diag.accepted_G.push_back(m.G);
                if (m.grad.cwiseAbs().maxCoeff() <= s.eps1)
                {
                    found = true;
                    r.diag.stop = LmStop::gradient;
                }
                mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
                nu = 2.0;
            }
            else
            {
                ++r.diag.rejected;
                mu *= nu;
                nu *= 2.0;
            }
        }
        r.diag.iterations = q;
        r.diag.final_G = m.G;
        r.diag.final_gradient = m.grad.cwiseAbs().maxCoeff();
        r.diag.converged = found;
        if (!found)
            r.diag.stop = LmStop::max_iterations;
        return r;
    }

    inline LmResult lm_minimize(const CMat &E_n, const Kappa2D &kappa0, const LmSettings &s, const SliceDims &d)
    {
        CMat basis = E_n.cols() > 0 ? E_n : CMat(Eigen::Index(d.size()), 0);
        return lm_minimize(NoiseSubspace::from_basis(basis), kappa0, s, d);
    }

    // Weighted 1D root-function value of every initial triplet on the two active dims;
    // the permutation sorts it ascending (strongest echo first), stable on ties
    inline std::vector<std::size_t> order_targets(const InitialTriplets &init, const RootPolynomial &pa,
                                                  const RootPolynomial &pb, const SystemConfig &c)
    {
        const std::size_t U = init.triplets.size();
        std::vector<double> score(U);
        const double Da = double(pa.size), Db = double(pb.size);
        for (std::size_t i = 0; i < U; ++i)
        {
            const double fa = pa.on_circle(phase_of(c, pa.dim, init.triplets[i][pa.dim]));
            const double fb = pb.on_circle(phase_of(c, pb.dim, init.triplets[i][pb.dim]));
            score[i] = fa / (Da * Da) + fb / (Db * Db);
        }
        std::vector<std::size_t> perm(U);
        std::iota(perm.begin(), perm.end(), 0);
        std::stable_sort(perm.begin(), perm.end(), [&](std::size_t x, std::size_t y)
                         { return score[x] < score[y]; });
        return perm;
    }

    struct PairDiagnostics
    {
        std::size_t init_index = 0; // triplet this pair was started from
        std::size_t iterations = 0;
        double final_G = 0.0;
        bool converged = false;
        bool augmentation_failed = false; // fell back to the previous noise subspace
        bool refinement_rejected = false; // polish collapsed onto an earlier estimate and was discarded
        bool clamped = false;             // azimuth phase outside the arcsine domain
    };

    struct Pair2DEstimates
    {
        Dim dim_a = Dim::azimuth;
        Dim dim_b = Dim::velocity;
        std::vector<std::pair<double, double>> pairs; // (param_a, param_b) in estimation order
        std::vector<PairDiagnostics> diagnostics;
    };

    // Collapse radius as a fraction of the window Rayleigh cell 2 pi / D
    inline constexpr double kCollapseFraction = 0.05;

    enum class IsuMode
    {
        off,      // every target minimizes the plain null spectrum
        verbatim, // every target after the first minimizes the augmented null spectrum
        refined   // plain null spectrum; the augmented search (plus a plain polish) only when that collapses onto an earlier estimate
    };

    struct Isu2DOptions
    {
        IsuMode mode = IsuMode::refined;
        bool explicit_basis = false; // full EVD and explicit E_n instead of the signal-complement form
    };

    inline Pair2DEstimates run_isu2dmusic(const Observation &obs, std::size_t U, Dim a, Dim b,
                                          const SmoothingConfig &smoothing, const InitialTriplets &init,
                                          const LmSettings &settings, const Isu2DOptions &opt = {})
    {
        if (a == b)
            throw std::invalid_argument("run_isu2dmusic: active dims must differ");
        if (init.triplets.size() != U)
            throw std::invalid_argument("run_isu2dmusic: initial triplet count differs from U");
        settings.check();
        const SystemConfig &c = obs.config();
        // Canonical axis order inside; outputs follow the requested (a, b)
        const bool swapped = index(a) > index(b);
        const Dim ca = swapped ? b : a, cb = swapped ? a : b;
        const SliceDims dims{smoothing.sub(ca), smoothing.sub(cb)};
        if (U >= dims.size())
            throw std::invalid_argument("run_isu2dmusic: U must be below D_a * D_b");

        const CMat R = smoothed_covariance(obs, window_for_slice(smoothing, ca, cb));
        NoiseSubspace P = opt.explicit_basis ? NoiseSubspace::from_basis(eig_split(R, U).E_n)
                                             : NoiseSubspace::complement_of(top_eigenvectors(R, U).E_s);

        std::vector<std::size_t> order(U);
        std::iota(order.begin(), order.end(), 0);
        const auto &pa = init.polys[index(ca)], &pb = init.polys[index(cb)];
        if (pa.size > 0 && pb.size > 0)
            order = order_targets(init, pa, pb, c);

        Pair2DEstimates out;
        out.dim_a = a;
        out.dim_b = b;
        const NoiseSubspace P1 = P;
        std::vector<Kappa2D> found;
        // Two estimates closer than this share one spectrum minimum
        const double cell_a = kCollapseFraction * 2.0 * kPi / double(dims.a);
        const double cell_b = kCollapseFraction * 2.0 * kPi / double(dims.b);
        for (std::size_t step = 0; step < U; ++step)
        {
            PairDiagnostics dg;
            dg.init_index = order[step];
            if (step > 0 && opt.mode != IsuMode::off)
            {
                try
                {
                    P = P.augmented(slice_steering(found.back(), dims));
                }
                catch (const EstimationError &)
                {
                    dg.augmentation_failed = true;
                }
            }
            const Triplet &t0 = init.triplets[order[step]];
            const Kappa2D k0{phase_of(c, ca, t0[ca]), phase_of(c, cb, t0[cb])};
            auto collapsed = [&](const Kappa2D &x)
            {
                for (const auto &k : found)
                    if (std::abs(wrap_pi(x.phase_a - k.phase_a)) < cell_a && std::abs(wrap_pi(x.phase_b - k.phase_b)) < cell_b)
                        return true;
                return false;
            };
            LmResult lr;
            if (opt.mode == IsuMode::refined)
            {
                // Plain spectrum first; the augmented search only steps in when that lands on an earlier target
                lr = lm_minimize(P1, k0, settings, dims);
                dg.iterations = lr.diag.iterations;
                if (step > 0 && collapsed(lr.kappa))
                {
                    const LmResult isu = lm_minimize(P, k0, settings, dims);
                    const LmResult polished = lm_minimize(P1, isu.kappa, settings, dims);
                    dg.iterations += isu.diag.iterations + polished.diag.iterations;
                    if (collapsed(polished.kappa))
                    {
                        dg.refinement_rejected = true;
                        lr = isu;
                    }
                    else
                        lr = polished;
                }
            }
            else
            {
                lr = lm_minimize(P, k0, settings, dims);
                dg.iterations = lr.diag.iterations;
            }
            found.push_back(lr.kappa);
            dg.final_G = lr.diag.final_G;
            dg.converged = lr.diag.converged;
            const double va = param_from_phase_clamped(c, ca, lr.kappa.phase_a, &dg.clamped);
            const double vb = param_from_phase_clamped(c, cb, lr.kappa.phase_b, &dg.clamped);
            out.pairs.push_back(swapped ? std::make_pair(vb, va) : std::make_pair(va, vb));
            out.diagnostics.push_back(dg);
        }
        return out;
    }
}

#endif
