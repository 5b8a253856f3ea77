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

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace kronnet::data {

/// 1-d regression target on an interval. Training inputs are uniform over
/// [lo, hi] including endpoints and fixed across runs; the evaluation grid
/// is uniform with n_eval points.
struct RegressionTask {
    std::string name;
    std::function<double(double)> target;
    double lo = 0.0, hi = 1.0;
    int n_train = 0;
    int n_eval = 1001;

    std::vector<double> train_x() const;
    std::vector<double> train_y() const;
    std::vector<double> eval_x() const;
    std::vector<double> eval_y() const;
};

/// names: "discontinuous" | "highfreq" (sin(m pi x), pass m)
RegressionTask make_regression_task(const std::string& name, int freq_m = 1);

/// 2-d Helmholtz problem on [-1,1]^2 with homogeneous Dirichlet data:
/// Delta u + k^2 u = f.
struct HelmholtzProblem {
    std::string name;
    double k = 1.0;
    std::function<double(double, double)> exact;
    std::function<double(double, double)> exact_laplacian;
    std::function<double(double, double)> forcing;
    int n_residual = 6000;
    int n_boundary = 300;
};

/// cases: "base" (u = sin(pi x) sin(4 pi y), k = 1, stated forcing) |
/// "highfreq" (u = sin(5 pi x) sin(10 pi y), forcing derived analytically)
HelmholtzProblem make_helmholtz(const std::string& which);

struct Collocation {
    std::vector<double> interior; // n_res x 2
    std::vector<double> boundary; // n_bnd x 2, max(|x|,|y|) = 1
};

/// Interior points i.i.d. uniform on (-1,1)^2; boundary points uniform on
/// the four edges, counts split evenly with the remainder going to the
/// first edges. Deterministic per seed.
Collocation sample_collocation(int n_residual, int n_boundary, std::uint64_t seed);

struct ToyClassificationSet {
    std::vector<double> X; // n x 2
    std::vector<double> y; // n, labels 0/1
    int n = 0;
};

/// Interleaving half-circles, second moon offset by (1, -0.5), plus
/// Gaussian noise; labels split n/2 per class (outer = 0).
ToyClassificationSet make_two_moons(int n, double noise, std::uint64_t seed);

/// Concentric circles, inner radius = factor, plus Gaussian noise.
ToyClassificationSet make_two_circles(int n, double noise, double factor, std::uint64_t seed);

/// |pred - exact|_2 / |exact|_2; throws on a zero exact norm.
double relative_l2_error(std::span<const double> pred, std::span<const double> exact);

double accuracy(std::span<const double> logits, std::span<const double> labels);

/// CSV with a header row: x0[,x1,...],y.
void export_csv(const std::string& path, std::span<const double> X, int dim,
                std::span<const double> y);
struct CsvData {
    std::vector<double> X;
    std::vector<double> y;
    int dim = 0;
    int n = 0;
};
CsvData import_csv(const std::string& path);

} // namespace kronnet::data
