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

#include "kronnet/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kronnet::la {

std::vector<double> jacobi_eigvals_sym(std::vector<double> a, int n, double tol, int max_sweeps) {
    if (n <= 0) return {};
    auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
    const double fro = frobenius_norm(a);
    const double thresh = tol * (fro > 0.0 ? fro : 1.0);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
        if (std::sqrt(2.0 * off) <= thresh) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                if (apq == 0.0) continue;
                const double app = at(p, p), aqq = at(q, q);
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int i = 0; i < n; ++i) {
                    const double aip = at(i, p), aiq = at(i, q);
                    at(i, p) = c * aip - s * aiq;
                    at(i, q) = s * aip + c * aiq;
                }
                for (int i = 0; i < n; ++i) {
                    const double api = at(p, i), aqi = at(q, i);
                    at(p, i) = c * api - s * aqi;
                    at(q, i) = s * api + c * aqi;
                }
            }
        }
    }
    std::vector<double> ev(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = at(i, i);
    std::sort(ev.begin(), ev.end(), std::greater<double>());
    return ev;
}

std::vector<double> singular_values(std::span<const double> a, int k, int m) {
    if (k < m) throw std::invalid_argument("singular_values: needs k >= m");
    std::vector<double> gram(static_cast<std::size_t>(m) * m, 0.0);
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
            double s = 0.0;
            for (int r = 0; r < k; ++r)
                s += a[static_cast<std::size_t>(r) * m + i] * a[static_cast<std::size_t>(r) * m + j];
            gram[static_cast<std::size_t>(i) * m + j] = s;
            gram[static_cast<std::size_t>(j) * m + i] = s;
        }
    }
    std::vector<double> ev = jacobi_eigvals_sym(std::move(gram), m);
    for (double& v : ev) v = std::sqrt(std::max(v, 0.0));
    return ev;
}

double spectral_norm(std::span<const double> a, int k, int m) {
    if (k >= m) return singular_values(a, k, m).front();
    // transpose and reuse
    std::vector<double> t(static_cast<std::size_t>(m) * k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < m; ++j)
            t[static_cast<std::size_t>(j) * k + i] = a[static_cast<std::size_t>(i) * m + j];
    return singular_values(t, m, k).front();
}

double frobenius_norm(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}

double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

double norm1(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += std::abs(v);
    return s;
}

void matvec(std::span<const double> a, int rows, int cols, std::span<const double> x,
            std::span<double> y) {
    for (int i = 0; i < rows; ++i) {
        double s = 0.0;
        const double* row = a.data() + static_cast<std::size_t>(i) * cols;
        for (int j = 0; j < cols; ++j) s += row[j] * x[static_cast<std::size_t>(j)];
        y[static_cast<std::size_t>(i)] = s;
    }
}

void matvec_t(std::span<const double> a, int rows, int cols, std::span<const double> x,
              std::span<double> y) {
    for (int j = 0; j < cols; ++j) y[static_cast<std::size_t>(j)] = 0.0;
    for (int i = 0; i < rows; ++i) {
        const double* row = a.data() + static_cast<std::size_t>(i) * cols;
        const double xi = x[static_cast<std::size_t>(i)];
        for (int j = 0; j < cols; ++j) y[static_cast<std::size_t>(j)] += row[j] * xi;
    }
}

} // namespace kronnet::la
