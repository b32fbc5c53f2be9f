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

#ifndef JARVE_CRB_HPP
#define JARVE_CRB_HPP

// Cramer-Rao bounds for (theta, r, v) of U targets with unknown complex amplitudes.
// Azimuth is in radians throughout; rcrb converts to degrees.

#include "jarve/signal.hpp"

#include <Eigen/Cholesky>

namespace jarve
{
    struct CrbEntry
    {
        double theta = 0.0;    // rad^2 (crb) or deg (rcrb)
        double range = 0.0;    // m^2 or m
        double velocity = 0.0; // (m/s)^2 or m/s
    };

    struct CrbResult
    {
        RMat crb_matrix; // 3U x 3U, parameter order theta_1..U, r_1..U, v_1..U
        std::vector<CrbEntry> per_target;
        std::vector<CrbEntry> rcrb;
    };

    // Phase slopes d Phi / d param (rad per rad, per m, per m/s), signed as the phase model
    inline std::array<double, 3> phase_slopes(const SystemConfig &c, double theta_deg)
    {
        const double ct = std::cos(theta_deg * kDegToRad);
        if (std::abs(ct) < 1e-12)
            throw ConfigError("azimuth at +-90 deg: phase slope vanishes");
        return {2.0 * kPi * c.antenna_spacing_m * ct / c.wavelength_m(),
                -4.0 * kPi * c.subcarrier_spacing_hz / kSpeedOfLight,
                4.0 * kPi * c.carrier_freq_hz * c.symbol_period_s() / kSpeedOfLight};
    }

    // dA = [dA/dtheta, dA/dr, dA/dv], each LNM x U; column i of a block is (j k slope) * a_i entrywise
    inline CMat manifold_derivative(const SystemConfig &c, const std::vector<Target> &targets)
    {
        const auto U = Eigen::Index(targets.size());
        const std::size_t L = c.n_antennas, N = c.n_subcarriers, M = c.n_symbols;
        const Manifold man = manifold(c, targets);
        CMat dA(man.A.rows(), 3 * U);
        const cdouble j(0.0, 1.0);
        for (Eigen::Index i = 0; i < U; ++i)
        {
            const auto s = phase_slopes(c, targets[std::size_t(i)].azimuth_deg);
            for (std::size_t l = 0; l < L; ++l)
                for (std::size_t n = 0; n < N; ++n)
                    for (std::size_t m = 0; m < M; ++m)
                    {
                        const auto row = Eigen::Index((l * N + n) * M + m);
                        const cdouble a = j * man.A(row, i);
                        dA(row, i) = a * (double(l) * s[0]);
                        dA(row, U + i) = a * (double(n) * s[1]);
                        dA(row, 2 * U + i) = a * (double(m) * s[2]);
                    }
        }
        return dA;
    }

    namespace detail
    {
        inline constexpr double kMaxManifoldCondition = 1e10;

        inline void check_rank(const CMat &A)
        {
            const Eigen::SelfAdjointEigenSolver<CMat> es(A.adjoint() * A, Eigen::EigenvaluesOnly);
            const RVec ev = es.eigenvalues();
            const double lo = std::max(ev.minCoeff(), 0.0), hi = ev.maxCoeff();
            if (!(lo > 0.0) || std::sqrt(hi / lo) >= kMaxManifoldCondition)
                throw EstimationError("targets unresolvable at this geometry");
        }

        // Sigma = I_3 kron diag(alpha)
        inline CVec sigma_diag(const std::vector<Target> &targets)
        {
            const CVec al = backscatter_vector(targets);
            CVec s(3 * al.size());
            s << al, al, al;
            return s;
        }

        inline CrbResult finish(RMat crb, std::size_t U)
        {
            crb = (0.5 * (crb + crb.transpose())).eval();
            CrbResult r;
            r.crb_matrix = crb;
            for (std::size_t i = 0; i < U; ++i)
            {
                const CrbEntry e{crb(Eigen::Index(i), Eigen::Index(i)), crb(Eigen::Index(U + i), Eigen::Index(U + i)),
                                 crb(Eigen::Index(2 * U + i), Eigen::Index(2 * U + i))};
                r.per_target.push_back(e);
                r.rcrb.push_back({std::sqrt(std::max(e.theta, 0.0)) * kRadToDeg, std::sqrt(std::max(e.range, 0.0)),
                                  std::sqrt(std::max(e.velocity, 0.0))});
            }
            return r;
        }

        inline RMat spd_inverse(const RMat &F, const char *what)
        {
            const Eigen::LLT<RMat> llt(F);
            if (llt.info() != Eigen::Success)
                throw EstimationError(std::string(what) + ": Fisher information not positive definite");
            return llt.solve(RMat::Identity(F.rows(), F.cols()));
        }
    }

    // (sigma^2 / 2) [Re{Sigma^H dA^H P_A_perp dA Sigma}]^{-1}
    inline CrbResult crb_theorem1(const SystemConfig &c, const std::vector<Target> &targets, double sigma2)
    {
        if (targets.empty())
            throw std::invalid_argument("crb_theorem1: no targets");
        const CMat A = manifold(c, targets).A;
        detail::check_rank(A);
        const CMat dA = manifold_derivative(c, targets);
        const Eigen::LDLT<CMat> gram(A.adjoint() * A);
        const CMat Pd = dA - A * gram.solve(A.adjoint() * dA);
        const CVec s = detail::sigma_diag(targets);
        const CMat W = s.conjugate().asDiagonal() * (dA.adjoint() * Pd) * s.asDiagonal();
        const RMat inv = detail::spd_inverse(W.real(), "crb_theorem1");
        return detail::finish(0.5 * sigma2 * inv, targets.size());
    }

    inline CrbResult crb_theorem1(const Scenario &sc)
    {
        return crb_theorem1(sc.config, sc.targets, sc.config.noise_power);
    }

    struct FisherBlocks
    {
        RMat F11; // 3U x 3U
        RMat F12; // 3U x 2U
        RMat F22; // 2U x 2U
    };

    // Fisher information split into interest (theta, r, v) and nuisance (Re alpha, Im alpha) blocks
    inline FisherBlocks fisher_blocks(const SystemConfig &c, const std::vector<Target> &targets, double sigma2)
    {
        if (!(sigma2 > 0.0))
            throw std::invalid_argument("fisher_blocks: sigma^2 must be positive");
        const CMat A = manifold(c, targets).A;
        const CMat dA = manifold_derivative(c, targets);
        const CVec s = detail::sigma_diag(targets);
        const auto U = A.cols();
        const double k = 2.0 / sigma2;
        FisherBlocks f;
        f.F11 = k * (s.conjugate().asDiagonal() * (dA.adjoint() * dA) * s.asDiagonal()).real();
        const CMat X = s.conjugate().asDiagonal() * (dA.adjoint() * A);
        f.F12.resize(3 * U, 2 * U);
        f.F12 << k * X.real(), -k * X.imag();
        const CMat G = A.adjoint() * A;
        f.F22.resize(2 * U, 2 * U);
        f.F22 << k * G.real(), -k * G.imag(), k * G.imag(), k * G.real();
        return f;
    }

    // Closed-form inverse of F22 = (2/s2)[[Re G, -Im G], [Im G, Re G]]: same pattern built on G^{-1}
    inline RMat f22_inverse(const SystemConfig &c, const std::vector<Target> &targets, double sigma2)
    {
        const CMat A = manifold(c, targets).A;
        const CMat G = A.adjoint() * A;
        const CMat H = G.ldlt().solve(CMat::Identity(G.rows(), G.cols()));
        const auto U = G.rows();
        RMat out(2 * U, 2 * U);
        out << H.real(), -H.imag(), H.imag(), H.real();
        return 0.5 * sigma2 * out;
    }

    // [F11 - F12 F22^{-1} F12^T]^{-1}
    inline CrbResult crb_schur(const SystemConfig &c, const std::vector<Target> &targets, double sigma2)
    {
        const FisherBlocks f = fisher_blocks(c, targets, sigma2);
        const Eigen::LLT<RMat> f22(f.F22);
        if (f22.info() != Eigen::Success)
            throw EstimationError("targets unresolvable at this geometry");
        const RMat S = f.F11 - f.F12 * f22.solve(f.F12.transpose());
        return detail::finish(detail::spd_inverse(S, "crb_schur"), targets.size());
    }

    // Single-target closed forms 6 / (K gamma D (D^2 - 1) slope^2) per dim
    inline CrbEntry crb_single_closed_form(const SystemConfig &c, const Target &t, double snr_linear)
    {
        const double L = double(c.n_antennas), N = double(c.n_subcarriers), M = double(c.n_symbols);
        if (L < 2 || N < 2 || M < 2)
            throw std::invalid_argument("crb_single_closed_form: every dimension needs >= 2 samples");
        const auto s = phase_slopes(c, t.azimuth_deg);
        const double g = snr_linear;
        return {6.0 / (N * M * g * L * (L * L - 1.0) * s[0] * s[0]),
                6.0 / (L * M * g * N * (N * N - 1.0) * s[1] * s[1]),
                6.0 / (L * N * g * M * (M * M - 1.0) * s[2] * s[2])};
    }

    // Per-target root bound (deg, m, m/s) from the closed forms, gamma_i = |alpha_i|^2 / sigma^2
    inline std::vector<CrbEntry> rcrb_single(const SystemConfig &c, const std::vector<Target> &targets, double sigma2)
    {
        std::vector<CrbEntry> out;
        for (const auto &t : targets)
        {
            const double g = std::norm(t.backscatter) / sigma2;
            const CrbEntry e = crb_single_closed_form(c, t, g);
            out.push_back({std::sqrt(e.theta) * kRadToDeg, std::sqrt(e.range), std::sqrt(e.velocity)});
        }
        return out;
    }

    // Root-mean-square of per-target root bounds, per dim
    inline CrbEntry rms_rcrb(const std::vector<CrbEntry> &r)
    {
        CrbEntry s;
        for (const auto &e : r)
        {
            s.theta += e.theta * e.theta;
            s.range += e.range * e.range;
            s.velocity += e.velocity * e.velocity;
        }
        const double n = double(std::max<std::size_t>(r.size(), 1));
        return {std::sqrt(s.theta / n), std::sqrt(s.range / n), std::sqrt(s.velocity / n)};
    }
}

#endif
