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

#ifndef JARVE_SUBSPACE_HPP
#define JARVE_SUBSPACE_HPP

#include "jarve/lapack.hpp"
#include "jarve/smoothing.hpp"

namespace jarve
{
    // Sample covariance (1/S) B B^H of materialized snapshots
    inline CMat covariance(const SnapshotMatrix &snap)
    {
        if (snap.count() == 0)
            throw std::invalid_argument("covariance: no snapshots");
        const Eigen::Index D = snap.data.rows();
        CMat R = CMat::Zero(D, D);
        R.selfadjointView<Eigen::Lower>().rankUpdate(snap.data, 1.0 / double(snap.count()));
        R.triangularView<Eigen::StrictlyUpper>() = R.adjoint();
        for (Eigen::Index i = 0; i < D; ++i)
            R(i, i) = cdouble(R(i, i).real(), 0.0);
        return R;
    }

    struct SubspacePair
    {
        CMat E_s;           // D x U
        CMat E_n;           // D x (D - U)
        RVec eigenvalues;   // length D, non-increasing
        bool near_degenerate = false; // lambda_U and lambda_{U+1} practically equal
    };

    // Relative gap below which the U-th / (U+1)-th eigenvalues are reported as degenerate
    inline constexpr double kDegenerateGap = 1e-9;

    namespace detail
    {
        inline void clamp_eigenvalues(RVec &w, double trace)
        {
            for (Eigen::Index i = 0; i < w.size(); ++i)
                if (w[i] < 0.0 && w[i] >= -1e-12 * std::abs(trace))
                    w[i] = 0.0;
        }
    }

    // Full Hermitian EVD split into the top-U (signal) and remaining (noise) eigenvectors
    inline SubspacePair eig_split(const CMat &R, std::size_t U)
    {
        const Eigen::Index D = R.rows();
        if (R.cols() != D)
            throw std::invalid_argument("eig_split: matrix not square");
        if (U < 1 || Eigen::Index(U) >= D)
            throw std::invalid_argument("eig_split: need 1 <= U < D");
        RVec w;
        CMat V;
        lapack::hermitian_eig(R, w, V); // ascending
        detail::clamp_eigenvalues(w, R.trace().real());

        SubspacePair sp;
        sp.eigenvalues = w.reverse();
        sp.E_s = V.rightCols(Eigen::Index(U)).rowwise().reverse();
        sp.E_n = V.leftCols(D - Eigen::Index(U)).rowwise().reverse();
        const double top = std::max(std::abs(sp.eigenvalues[0]), std::numeric_limits<double>::min());
        sp.near_degenerate = (sp.eigenvalues[Eigen::Index(U) - 1] - sp.eigenvalues[Eigen::Index(U)]) <= kDegenerateGap * top;
        return sp;
    }

    // Orthogonal projector onto a noise subspace, held either as an explicit orthonormal basis
    // or as the complement of a signal basis. Augmentation appends directions in both forms.
    class NoiseSubspace
    {
    public:
        NoiseSubspace() = default;

        static NoiseSubspace from_basis(CMat E_n)
        {
            NoiseSubspace s;
            s.dim_ = std::size_t(E_n.rows());
            s.explicit_ = true;
            s.basis_ = std::move(E_n);
            return s;
        }

        static NoiseSubspace complement_of(CMat E_s)
        {
            NoiseSubspace s;
            s.dim_ = std::size_t(E_s.rows());
            s.explicit_ = false;
            s.signal_ = std::move(E_s);
            return s;
        }

        std::size_t dim() const { return dim_; }
        std::size_t rank() const
        {
            return explicit_ ? std::size_t(basis_.cols())
                             : dim_ - std::size_t(signal_.cols()) + std::size_t(added_.cols());
        }
        bool is_explicit() const { return explicit_; }

        // Explicit orthonormal basis (built on demand for the complement form)
        CMat basis() const
        {
            if (explicit_)
                return basis_;
            const Eigen::Index D = Eigen::Index(dim_);
            CMat P = CMat::Identity(D, D) - signal_ * signal_.adjoint();
            if (added_.cols() > 0)
                P += added_ * added_.adjoint();
            P = (P + P.adjoint()).eval() * 0.5;
            RVec w;
            CMat V;
            lapack::hermitian_eig(P, w, V);
            return V.rightCols(Eigen::Index(rank()));
        }

        // P x
        CVec project(const CVec &x) const
        {
            if (explicit_)
                return basis_ * (basis_.adjoint() * x);
            CVec y = x - signal_ * (signal_.adjoint() * x);
            if (added_.cols() > 0)
                y += added_ * (added_.adjoint() * x);
            return y;
        }

        CMat project(const CMat &X) const
        {
            if (explicit_)
                return basis_ * (basis_.adjoint() * X);
            CMat Y = X - signal_ * (signal_.adjoint() * X);
            if (added_.cols() > 0)
                Y += added_ * (added_.adjoint() * X);
            return Y;
        }

        // x^H P x
        double quadratic(const CVec &x) const
        {
            if (explicit_)
                return (basis_.adjoint() * x).squaredNorm();
            return project(x).squaredNorm(); // |Px|^2 avoids cancellation near the null
        }

        // Subspace spanned by this one and the component of a outside it
        NoiseSubspace augmented(const CVec &a) const
        {
            const CVec r = a - project(a);
            const double rn = r.norm();
            if (!(rn >= 1e-8 * a.norm()) || a.norm() == 0.0)
                throw EstimationError("estimated steering already annihilated");
            const CVec v = r / rn;
            NoiseSubspace out = *this;
            CMat &tgt = explicit_ ? out.basis_ : out.added_;
            if (!explicit_ && tgt.rows() == 0)
                tgt.resize(Eigen::Index(dim_), 0);
            tgt.conservativeResize(Eigen::Index(dim_), tgt.cols() + 1);
            tgt.col(tgt.cols() - 1) = v;
            return out;
        }

    private:
        std::size_t dim_ = 0;
        bool explicit_ = true;
        CMat basis_;  // explicit form
        CMat signal_; // complement form: P = I - E_s E_s^H + V V^H
        CMat added_;
    };

    // [E_n, v] with v the normalized component of a_est outside span(E_n)
    inline CMat augment_noise_subspace(const CMat &E_n, const CVec &a_est)
    {
        if (E_n.cols() > 0 && E_n.rows() != a_est.size())
            throw std::invalid_argument("augment_noise_subspace: dimension mismatch");
        CMat basis = E_n.cols() > 0 ? E_n : CMat(a_est.size(), 0);
        return NoiseSubspace::from_basis(basis).augmented(a_est).basis();
    }

    struct SignalSubspace
    {
        CMat E_s;         // D x U, strongest first
        RVec eigenvalues; // top U, non-increasing
    };

    // Top-U eigenpairs only (partial Hermitian EVD)
    inline SignalSubspace top_eigenvectors(const CMat &R, std::size_t U)
    {
        const Eigen::Index D = R.rows();
        if (U < 1 || Eigen::Index(U) >= D)
            throw std::invalid_argument("top_eigenvectors: need 1 <= U < D");
        RVec w;
        CMat V;
        lapack::hermitian_eig_top(R, Eigen::Index(U), w, V);
        return {V.rowwise().reverse(), w.reverse()};
    }
}

#endif
