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

#ifndef JARVE_LAPACK_HPP
#define JARVE_LAPACK_HPP

// Thin LAPACKE wrappers over Eigen storage (column-major, std::complex<double>)

#include "jarve/common.hpp"

#include <complex>
#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include <string>
#include <vector>

namespace jarve::lapack
{
    inline void check(lapack_int info, const char *what)
    {
        if (info != 0)
            throw EstimationError(std::string(what) + " failed (info = " + std::to_string(info) + ")");
    }

    // All eigenpairs of a Hermitian matrix, eigenvalues ascending (zheevd)
    inline void hermitian_eig(const CMat &A, RVec &w, CMat &V)
    {
        const lapack_int n = lapack_int(A.rows());
        V = A;
        w.resize(n);
        if (n == 0)
            return;
        check(LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n, V.data(), n, w.data()), "zheevd");
    }

    // Largest k eigenpairs, eigenvalues ascending (zheevr, index range)
    inline void hermitian_eig_top(const CMat &A, Eigen::Index k, RVec &w, CMat &V)
    {
        const lapack_int n = lapack_int(A.rows());
        CMat a = A;
        RVec wall(n);
        V.resize(n, k);
        std::vector<lapack_int> isuppz(std::size_t(2 * std::max<lapack_int>(k, 1)));
        lapack_int found = 0;
        check(LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, a.data(), n, 0.0, 0.0, n - lapack_int(k) + 1, n, 0.0,
                             &found, wall.data(), V.data(), n, isuppz.data()),
              "zheevr");
        if (found != lapack_int(k))
            throw EstimationError("zheevr returned an unexpected number of eigenpairs");
        w = wall.head(k);
    }

    // Eigenvalues of a general complex matrix (zgeev, balanced)
    inline std::vector<cdouble> general_eigenvalues(CMat A)
    {
        const lapack_int n = lapack_int(A.rows());
        std::vector<cdouble> w(static_cast<std::size_t>(n));
        if (n == 0)
            return w;
        check(LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, A.data(), n, w.data(), nullptr, 1, nullptr, 1), "zgeev");
        return w;
    }
}

#endif
