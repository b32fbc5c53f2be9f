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

#ifndef JARVE_INIT1D_HPP
#define JARVE_INIT1D_HPP

#include "jarve/subspace.hpp"

#include <algorithm>
#include <future>
#include <numeric>

namespace jarve
{
    struct Triplet
    {
        double theta_deg = 0.0;
        double range_m = 0.0;
        double velocity_mps = 0.0;

        double operator[](Dim d) const { return d == Dim::azimuth ? theta_deg : (d == Dim::range ? range_m : velocity_mps); }
        double &operator[](Dim d) { return d == Dim::azimuth ? theta_deg : (d == Dim::range ? range_m : velocity_mps); }
    };

    // g(kappa) = sum_k coeffs[k] kappa^k = kappa^{D-1} a^H(kappa) C a(kappa) for |kappa| = 1
    struct RootPolynomial
    {
        CVec coeffs; // ascending powers, length 2D-1
        Dim dim = Dim::azimuth;
        std::size_t size = 0; // D
        bool degenerate = false; // highest coefficient vanishes

        cdouble evaluate(cdouble kappa) const
        {
            cdouble acc(0.0, 0.0);
            for (Eigen::Index k = coeffs.size() - 1; k >= 0; --k)
                acc = acc * kappa + coeffs[k];
            return acc;
        }

        // |g| on the unit circle, equal to a^H C a
        double on_circle(double phase) const { return std::abs(evaluate(std::polar(1.0, phase))); }
    };

    // Coefficient k is the sum of the (k - (D-1))-th diagonal of C = E_n E_n^H
    inline RootPolynomial build_root_polynomial(const CMat &E_n, Dim dim = Dim::azimuth)
    {
        const Eigen::Index D = E_n.rows();
        if (D < 1)
            throw std::invalid_argument("build_root_polynomial: empty subspace");
        const CMat C = E_n * E_n.adjoint();
        RootPolynomial p;
        p.dim = dim;
        p.size = std::size_t(D);
        p.coeffs = CVec::Zero(2 * D - 1);
        for (Eigen::Index off = -(D - 1); off <= D - 1; ++off)
        {
            cdouble s(0.0, 0.0);
            for (Eigen::Index r = std::max<Eigen::Index>(0, -off); r < D && r + off < D; ++r)
                s += C(r, r + off);
            p.coeffs[off + D - 1] = s;
        }
        const double l1 = p.coeffs.cwiseAbs().sum();
        p.degenerate = !(std::abs(p.coeffs[2 * D - 2]) > 1e-12 * l1);
        return p;
    }

    // Roots of sum_k c[k] x^k via companion-matrix eigenvalues; vanishing top coefficients
    // drop roots at infinity, vanishing low coefficients give roots at zero
    inline std::vector<cdouble> polynomial_roots(const CVec &c)
    {
        const double l1 = c.cwiseAbs().sum();
        if (l1 == 0.0)
            return {};
        const double tiny = 1e-14 * l1;
        Eigen::Index hi = c.size() - 1, lo = 0;
        while (hi > 0 && std::abs(c[hi]) <= tiny)
            --hi;
        while (lo < hi && std::abs(c[lo]) <= tiny)
            ++lo;
        std::vector<cdouble> roots(std::size_t(lo), cdouble(0.0, 0.0));
        const Eigen::Index n = hi - lo;
        if (n <= 0)
            return roots;
        CMat comp = CMat::Zero(n, n);
        for (Eigen::Index k = 0; k < n; ++k)
            comp(0, k) = -c[hi - 1 - k] / c[hi];
        for (Eigen::Index k = 1; k < n; ++k)
            comp(k, k - 1) = 1.0;
        auto ev = lapack::general_eigenvalues(comp);

        // One Newton correction per root, kept only when it lowers |p|
        auto eval = [&](cdouble x, cdouble &d)
        {
            cdouble p(0.0, 0.0);
            d = cdouble(0.0, 0.0);
            for (Eigen::Index k = hi; k >= lo; --k)
            {
                d = d * x + p;
                p = p * x + c[k];
            }
            return p;
        };
        for (auto &x : ev)
        {
            cdouble d;
            const cdouble p = eval(x, d);
            if (std::abs(d) > 0.0)
            {
                const cdouble y = x - p / d;
                cdouble d2;
                if (std::isfinite(y.real()) && std::isfinite(y.imag()) && std::abs(eval(y, d2)) < std::abs(p))
                    x = y;
            }
        }
        roots.insert(roots.end(), ev.begin(), ev.end());
        return roots;
    }

    // Candidate directions from the roots. Roots come in conjugate-reciprocal pairs (z, 1/conj(z));
    // each pair is one candidate located by its inner member. The phase is taken from the pair sum,
    // which stays exact when a double root on the circle splits under rounding.
    struct RootCandidate
    {
        double phase = 0.0;
        double radius = 0.0; // magnitude of the inner member
    };

    // Largest mirror-image mismatch accepted as a pair (split double roots sit ~sqrt(eps) apart)
    inline constexpr double kPairTol = 1e-5;

    namespace detail
    {
        // Newton on p' from z: a near-double root of p is a simple root of p'
        inline cdouble refine_double_root(const CVec &c, cdouble z)
        {
            auto eval = [&](cdouble x, cdouble &d2)
            {
                // p' and p'' by Horner
                cdouble d1(0.0, 0.0);
                d2 = cdouble(0.0, 0.0);
                for (Eigen::Index k = c.size() - 1; k >= 1; --k)
                {
                    d2 = d2 * x + d1;
                    d1 = d1 * x + double(k) * c[k];
                }
                return d1;
            };
            cdouble d2;
            cdouble f = eval(z, d2);
            for (int it = 0; it < 5 && std::abs(d2) > 0.0; ++it)
            {
                const cdouble y = z - f / d2;
                cdouble e2;
                const cdouble g = eval(y, e2);
                if (!(std::abs(g) < std::abs(f)))
                    break;
                z = y;
                f = g;
                d2 = e2;
            }
            return z;
        }
    }

    // With coeffs given, pairs closer than kPairTol (a double root split by rounding) are
    // located on the derivative instead of by the pair sum.
    inline std::vector<RootCandidate> root_candidates(const std::vector<cdouble> &roots, const CVec *coeffs = nullptr)
    {
        const std::size_t n = roots.size();
        struct Link
        {
            double d;
            std::size_t i, j;
        };
        std::vector<Link> links;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
            {
                if (roots[i] == cdouble(0.0) || roots[j] == cdouble(0.0))
                    continue;
                const double dij = std::abs(roots[j] - 1.0 / std::conj(roots[i]));
                const double dji = std::abs(roots[i] - 1.0 / std::conj(roots[j]));
                links.push_back({std::min(dij, dji), i, j});
            }
        std::stable_sort(links.begin(), links.end(), [](const Link &a, const Link &b)
                         { return a.d < b.d; });

        // Greedy matching, closest mirror images first
        std::vector<bool> used(n, false);
        std::vector<RootCandidate> out;
        for (const auto &lk : links)
        {
            if (used[lk.i] || used[lk.j])
                continue;
            const cdouble a = roots[lk.i], b = roots[lk.j];
            const double ra = std::abs(a), rb = std::abs(b);
            if (lk.d > kPairTol * std::max({1.0, ra, rb}))
                continue;
            used[lk.i] = used[lk.j] = true;
            const double phase = coeffs ? std::arg(detail::refine_double_root(*coeffs, 0.5 * (a + b))) : std::arg(a + b);
            out.push_back({phase, std::min(ra, rb)});
        }
        for (std::size_t i = 0; i < n; ++i)
            if (!used[i])
                out.push_back({std::arg(roots[i]), std::abs(roots[i])});
        return out;
    }

    // Tolerance outside the unit circle for unpaired roots
    inline constexpr double kOnCircleTol = 1e-6;

    // Selects U phases: candidates inside the closed disk nearest the circle,
    // ties to larger magnitude, then smaller angle
    inline std::vector<double> select_root_phases(const std::vector<RootCandidate> &cands, std::size_t U)
    {
        std::vector<RootCandidate> inside;
        for (const auto &c : cands)
            if (c.radius > 0.0 && c.radius <= 1.0 + kOnCircleTol) // roots at zero mirror roots at infinity
                inside.push_back(c);
        if (inside.size() < U)
            throw EstimationError("fewer than U candidate roots inside the unit disk");
        std::stable_sort(inside.begin(), inside.end(), [](const RootCandidate &a, const RootCandidate &b)
                         {
                             const double da = std::abs(1.0 - a.radius), db = std::abs(1.0 - b.radius);
                             if (da != db)
                                 return da < db;
                             if (a.radius != b.radius)
                                 return a.radius > b.radius;
                             return a.phase < b.phase; });
        std::vector<double> ph(U);
        for (std::size_t i = 0; i < U; ++i)
            ph[i] = inside[i].phase;
        return ph;
    }

    inline std::vector<double> roots_to_params(const RootPolynomial &poly, std::size_t U, Dim dim, const SystemConfig &c)
    {
        if (U >= poly.size)
            throw std::invalid_argument("roots_to_params: need U < D");
        const auto phases = select_root_phases(root_candidates(polynomial_roots(poly.coeffs), &poly.coeffs), U);
        std::vector<double> p(U);
        for (std::size_t i = 0; i < U; ++i)
            p[i] = param_from_phase(c, dim, phases[i]);
        return p;
    }

    struct InitialTriplets
    {
        std::vector<Triplet> triplets;
        CVec alpha_hat;
        double residual = 0.0;
        bool ambiguous = false; // another pairing reached the same residual
        std::array<RootPolynomial, 3> polys;              // per dim (set by run_algorithm1)
        std::array<std::vector<double>, 3> per_dim;       // unpaired 1D estimates
    };

    inline constexpr std::size_t kMaxPairingTargets = 6;

    // Least-squares pairing over all (U!)^2 assignments of ranges and velocities to azimuths.
    // The residual is |z - A alpha|^2 with alpha = A^+ z.
    inline InitialTriplets pair_mle(const CVec &z, const std::vector<double> &thetas, const std::vector<double> &ranges,
                                    const std::vector<double> &velocities, const SystemConfig &c)
    {
        const std::size_t U = thetas.size();
        if (U < 1 || ranges.size() != U || velocities.size() != U)
            throw std::invalid_argument("pair_mle: parameter lists must share a length >= 1");
        if (U > kMaxPairingTargets)
            throw std::invalid_argument("pair_mle: at most 6 targets");
        if (std::size_t(z.size()) != c.size())
            throw std::invalid_argument("pair_mle: observation length mismatch");
        const std::size_t L = c.n_antennas, N = c.n_subcarriers, M = c.n_symbols;
        const Eigen::Index u = Eigen::Index(U);

        CMat At(L, u), Ar(N, u), Av(M, u);
        for (Eigen::Index i = 0; i < u; ++i)
        {
            At.col(i) = phase_ramp(phase_of(c, Dim::azimuth, thetas[std::size_t(i)]), L);
            Ar.col(i) = phase_ramp(phase_of(c, Dim::range, ranges[std::size_t(i)]), N);
            Av.col(i) = phase_ramp(phase_of(c, Dim::velocity, velocities[std::size_t(i)]), M);
        }
        const CMat Gt = At.adjoint() * At, Gr = Ar.adjoint() * Ar, Gv = Av.adjoint() * Av;

        // b[i][j][k] = (a_t,i (x) a_r,j (x) a_v,k)^H z by successive contraction
        Eigen::Map<const CMat> Zlnm(z.data(), Eigen::Index(M), Eigen::Index(L * N)); // column (l,n), row m
        const CMat T1 = Av.adjoint() * Zlnm;                                           // k x (l,n)
        std::vector<cdouble> b(U * U * U);
        for (Eigen::Index k = 0; k < u; ++k)
        {
            Eigen::Map<const CMat, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>> row(
                T1.data() + k, Eigen::Index(N), Eigen::Index(L),
                Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(Eigen::Index(N) * T1.rows(), T1.rows()));
            // row(n, l) = T1(k, l*N + n)
            const CMat T2 = Ar.adjoint() * CMat(row); // j x l
            const CMat T3 = T2 * At.conjugate();      // j x i
            for (Eigen::Index i = 0; i < u; ++i)
                for (Eigen::Index j = 0; j < u; ++j)
                    b[(std::size_t(i) * U + std::size_t(j)) * U + std::size_t(k)] = T3(j, i);
        }

        const double zz = z.squaredNorm();
        std::vector<std::size_t> sr(U), sv(U);
        std::iota(sr.begin(), sr.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        std::vector<std::size_t> best_r, best_v;
        CVec best_alpha;
        bool ambiguous = false;
        const double tie = 1e-12 * std::max(zz, std::numeric_limits<double>::min());
        do
        {
            std::iota(sv.begin(), sv.end(), 0);
            do
            {
                CMat G(u, u);
                CVec rhs(u);
                for (Eigen::Index p = 0; p < u; ++p)
                {
                    rhs[p] = b[(std::size_t(p) * U + sr[std::size_t(p)]) * U + sv[std::size_t(p)]];
                    for (Eigen::Index q = 0; q < u; ++q)
                        G(p, q) = Gt(p, q) * Gr(Eigen::Index(sr[std::size_t(p)]), Eigen::Index(sr[std::size_t(q)])) *
                                  Gv(Eigen::Index(sv[std::size_t(p)]), Eigen::Index(sv[std::size_t(q)]));
                }
                Eigen::SelfAdjointEigenSolver<CMat> es(G, Eigen::EigenvaluesOnly);
                const double lmin = es.eigenvalues()[0], lmax = es.eigenvalues()[u - 1];
                if (!(lmin > 0.0) || lmax / lmin > 1e12)
                    continue;
                const CVec alpha = G.ldlt().solve(rhs);
                const double res = std::max(0.0, zz - 2.0 * std::real(alpha.dot(rhs)) + std::real(alpha.dot(G * alpha)));
                if (res < best - tie)
                {
                    best = res;
                    best_r = sr;
                    best_v = sv;
                    best_alpha = alpha;
                    ambiguous = false;
                }
                else if (std::abs(res - best) <= tie)
                    ambiguous = true;
            } while (std::next_permutation(sv.begin(), sv.end()));
        } while (std::next_permutation(sr.begin(), sr.end()));

        if (best_r.empty())
            throw EstimationError("manifold collinear: every pairing is ill-conditioned");
        InitialTriplets out;
        out.triplets.resize(U);
        for (std::size_t i = 0; i < U; ++i)
            out.triplets[i] = {thetas[i], ranges[best_r[i]], velocities[best_v[i]]};
        out.alpha_hat = best_alpha;
        out.residual = best;
        out.ambiguous = ambiguous;
        return out;
    }

    // Per-dimension root estimation followed by least-squares pairing
    inline InitialTriplets run_algorithm1(const Observation &obs, std::size_t U, const SmoothingConfig &smoothing,
                                          bool concurrent = false)
    {
        const SystemConfig &c = obs.config();
        for (Dim d : kAllDims)
        {
            const std::size_t s = smoothing.sub(d);
            if (s <= U || s > c.shape()[index(d)])
                throw std::invalid_argument("run_algorithm1: each 1D window must exceed U and fit the array");
        }
        auto one = [&](Dim d)
        {
            const CMat R = smoothed_covariance(obs, window_for_dim(smoothing, d));
            const SubspacePair sp = eig_split(R, U);
            RootPolynomial poly = build_root_polynomial(sp.E_n, d);
            auto params = roots_to_params(poly, U, d, c);
            return std::make_pair(std::move(poly), std::move(params));
        };
        std::array<std::pair<RootPolynomial, std::vector<double>>, 3> res;
        if (concurrent)
        {
            auto f0 = std::async(std::launch::async, one, Dim::azimuth);
            auto f1 = std::async(std::launch::async, one, Dim::range);
            res[2] = one(Dim::velocity);
            res[0] = f0.get();
            res[1] = f1.get();
        }
        else
            for (Dim d : kAllDims)
                res[index(d)] = one(d);

        InitialTriplets out = pair_mle(flatten(obs), res[0].second, res[1].second, res[2].second, c);
        for (std::size_t k = 0; k < 3; ++k)
        {
            out.polys[k] = std::move(res[k].first);
            out.per_dim[k] = std::move(res[k].second);
        }
        return out;
    }
}

#endif
