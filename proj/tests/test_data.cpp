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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kronnet/data.hpp"
#include "kronnet/rng.hpp"

#include <cmath>
#include <cstdio>

using namespace kronnet;
using namespace kronnet::data;

TEST_CASE("discontinuous target values and branch convention") {
    RegressionTask t = make_regression_task("discontinuous");
    CHECK(t.target(-1.0) == 0.2 * std::sin(-6.0));
    CHECK(t.target(0.0) == 1.0); // x < 0 is strict; 0 takes the other branch
    // jump magnitude at 0 is exactly 1
    CHECK(t.target(0.0) - 0.2 * std::sin(0.0) == 1.0);
    CHECK(t.n_train == 5);
    auto x = t.train_x();
    CHECK(x.front() == -3.0);
    CHECK(x.back() == 3.0);
    for (double v : x) {
        CHECK(v >= t.lo);
        CHECK(v <= t.hi);
    }
}

TEST_CASE("highfreq target") {
    RegressionTask t = make_regression_task("highfreq", 1);
    CHECK(t.target(0.5) == doctest::Approx(1.0).epsilon(1e-15)); // sin(pi/2)
    CHECK(t.n_train == 100);
    CHECK(t.lo == 0.0);
    CHECK(t.hi == doctest::Approx(2.0 * Rng::pi));
    CHECK_THROWS_AS(make_regression_task("mystery"), std::invalid_argument);
}

TEST_CASE("helmholtz base: exact solution, forcing consistency") {
    HelmholtzProblem p = make_helmholtz("base");
    CHECK(p.exact(0.5, 0.125) == doctest::Approx(1.0).epsilon(1e-14));
    // f/u is the constant k^2 - 17 pi^2 wherever u != 0
    const double want_ratio = 1.0 - 17.0 * Rng::pi * Rng::pi;
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        const double x = rng.uniform(-1.0, 1.0), y = rng.uniform(-1.0, 1.0);
        const double u = p.exact(x, y);
        if (std::abs(u) < 1e-6) continue;
        CHECK(p.forcing(x, y) / u == doctest::Approx(want_ratio).epsilon(1e-12));
    }
    // forcing == laplacian + k^2 u analytically, 101 x 101 grid, 1e-10
    double worst = 0.0;
    for (int i = 0; i < 101; ++i) {
        for (int j = 0; j < 101; ++j) {
            const double x = -1.0 + 2.0 * i / 100.0, y = -1.0 + 2.0 * j / 100.0;
            const double lhs = p.exact_laplacian(x, y) + p.k * p.k * p.exact(x, y);
            worst = std::max(worst, std::abs(lhs - p.forcing(x, y)));
        }
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("helmholtz boundary is homogeneous for both cases") {
    for (const char* which : {"base", "highfreq"}) {
        HelmholtzProblem p = make_helmholtz(which);
        Rng rng(7);
        for (int i = 0; i < 100; ++i) {
            const double t = rng.uniform(-1.0, 1.0);
            CHECK(std::abs(p.exact(-1.0, t)) < 1e-12);
            CHECK(std::abs(p.exact(1.0, t)) < 1e-12);
            CHECK(std::abs(p.exact(t, -1.0)) < 1e-12);
            CHECK(std::abs(p.exact(t, 1.0)) < 1e-12);
        }
    }
}

TEST_CASE("highfreq helmholtz forcing derived from the stated solution") {
    HelmholtzProblem p = make_helmholtz("highfreq");
    Rng rng(9);
    for (int i = 0; i < 50; ++i) {
        const double x = rng.uniform(-1.0, 1.0), y = rng.uniform(-1.0, 1.0);
        const double lhs = p.exact_laplacian(x, y) + p.k * p.k * p.exact(x, y);
        CHECK(lhs == doctest::Approx(p.forcing(x, y)).epsilon(1e-12));
    }
}

TEST_CASE("collocation sampling: containment, split, determinism") {
    Collocation c = sample_collocation(100, 10, 42);
    for (int i = 0; i < 100; ++i) {
        CHECK(std::abs(c.interior[2 * static_cast<std::size_t>(i)]) < 1.0);
        CHECK(std::abs(c.interior[2 * static_cast<std::size_t>(i) + 1]) < 1.0);
    }
    for (int i = 0; i < 10; ++i) {
        const double x = c.boundary[2 * static_cast<std::size_t>(i)];
        const double y = c.boundary[2 * static_cast<std::size_t>(i) + 1];
        CHECK(std::max(std::abs(x), std::abs(y)) == 1.0);
    }
    // 10 = 2+2+... remainder to the first edges: left/right get 3, bottom/top 2
    int left = 0, right = 0, bottom = 0, top = 0;
    for (int i = 0; i < 10; ++i) {
        const double x = c.boundary[2 * static_cast<std::size_t>(i)];
        const double y = c.boundary[2 * static_cast<std::size_t>(i) + 1];
        if (x == -1.0) ++left;
        else if (x == 1.0) ++right;
        else if (y == -1.0) ++bottom;
        else ++top;
    }
    CHECK(left == 3);
    CHECK(right == 3);
    CHECK(bottom == 2);
    CHECK(top == 2);

    Collocation c2 = sample_collocation(100, 10, 42);
    CHECK(c.interior == c2.interior);
    CHECK(c.boundary == c2.boundary);
    CHECK_THROWS_AS(sample_collocation(0, 10, 1), std::invalid_argument);
}

TEST_CASE("two moons geometry at zero noise") {
    ToyClassificationSet s = make_two_moons(1000, 0.0, 3);
    int zeros = 0;
    for (int i = 0; i < s.n; ++i) {
        const double x = s.X[2 * static_cast<std::size_t>(i)];
        const double y = s.X[2 * static_cast<std::size_t>(i) + 1];
        if (s.y[static_cast<std::size_t>(i)] == 0.0) {
            ++zeros;
            // upper unit half-circle
            CHECK(std::abs(std::sqrt(x * x + y * y) - 1.0) < 1e-12);
            CHECK(y >= -1e-12);
        } else {
            // offset lower half-circle: (1 - cx)^2 + (0.5 + cy... radius 1 about (1, -0.5) flipped
            const double r = std::sqrt((x - 1.0) * (x - 1.0) + (y + 0.5) * (y + 0.5));
            CHECK(std::abs(r - 1.0) < 1e-12);
        }
    }
    CHECK(zeros == 500); // exactly balanced
}

TEST_CASE("two circles radii at zero noise") {
    ToyClassificationSet s = make_two_circles(1000, 0.0, 0.5, 4);
    int zeros = 0;
    for (int i = 0; i < s.n; ++i) {
        const double x = s.X[2 * static_cast<std::size_t>(i)];
        const double y = s.X[2 * static_cast<std::size_t>(i) + 1];
        const double r = std::sqrt(x * x + y * y);
        if (s.y[static_cast<std::size_t>(i)] == 0.0) {
            ++zeros;
            CHECK(r == doctest::Approx(1.0).epsilon(1e-12));
        } else {
            CHECK(r == doctest::Approx(0.5).epsilon(1e-12));
        }
    }
    CHECK(zeros == 500);
    // reproducible per seed
    ToyClassificationSet s2 = make_two_circles(1000, 0.05, 0.5, 9);
    ToyClassificationSet s3 = make_two_circles(1000, 0.05, 0.5, 9);
    CHECK(s2.X == s3.X);
}

TEST_CASE("relative l2 error") {
    std::vector<double> exact = {1.0, -2.0, 3.0};
    CHECK(relative_l2_error(exact, exact) == 0.0);
    std::vector<double> zero = {0.0, 0.0, 0.0};
    CHECK(relative_l2_error(zero, exact) == 1.0);
    std::vector<double> scaled = {1.1, -2.2, 3.3};
    CHECK(relative_l2_error(scaled, exact) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_THROWS_AS(relative_l2_error(exact, zero), std::invalid_argument);
}

TEST_CASE("csv round trip") {
    std::vector<double> X = {0.25, -1.5, 2.0, 0.125, 3.5, -0.75};
    std::vector<double> y = {1.0, 0.0, 1.0};
    const std::string path = "test_data_roundtrip.csv";
    export_csv(path, X, 2, y);
    CsvData back = import_csv(path);
    CHECK(back.dim == 2);
    CHECK(back.n == 3);
    CHECK(back.X == X);
    CHECK(back.y == y);
    std::remove(path.c_str());
}
