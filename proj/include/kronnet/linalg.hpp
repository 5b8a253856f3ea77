// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include <span>
#include <vector>

namespace kronnet::la {

/// Eigenvalues of a symmetric n x n matrix (row-major, overwritten) by
/// cyclic Jacobi rotations. Sweeps until the off-diagonal Frobenius mass
/// is below tol * ||A||_F, at most max_sweeps sweeps. Returns eigenvalues
/// sorted descending.
std::vector<double> jacobi_eigvals_sym(std::vector<double> a, int n, double tol = 1e-12,
                                       int max_sweeps = 100);

/// Singular values of a k x m matrix (k >= m), descending, computed from
/// the m x m Gram matrix A^T A by the Jacobi iteration above.
std::vector<double> singular_values(std::span<const double> a, int k, int m);

/// Largest singular value.
double spectral_norm(std::span<const double> a, int k, int m);

double frobenius_norm(std::span<const double> a);

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
double norm1(std::span<const double> x);

/// y = A x for row-major A (rows x cols).
void matvec(std::span<const double> a, int rows, int cols, std::span<const double> x,
            std::span<double> y);

/// y = A^T x for row-major A (rows x cols), y has length cols.
void matvec_t(std::span<const double> a, int rows, int cols, std::span<const double> x,
              std::span<double> y);

} // namespace kronnet::la
