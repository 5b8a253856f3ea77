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

#include "kronnet/data.hpp"

#include "kronnet/rng.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kronnet::data {

namespace {
constexpr double kPi = Rng::pi;
}

std::vector<double> RegressionTask::train_x() const {
    std::vector<double> x(static_cast<std::size_t>(n_train));
    if (n_train == 1) {
        x[0] = 0.5 * (lo + hi);
        return x;
    }
    for (int i = 0; i < n_train; ++i)
        x[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n_train - 1);
    return x;
}

std::vector<double> RegressionTask::train_y() const {
    std::vector<double> y;
    for (double x : train_x()) y.push_back(target(x));
    return y;
}

std::vector<double> RegressionTask::eval_x() const {
    std::vector<double> x(static_cast<std::size_t>(n_eval));
    for (int i = 0; i < n_eval; ++i)
        x[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n_eval - 1);
    return x;
}

std::vector<double> RegressionTask::eval_y() const {
    std::vector<double> y;
    for (double x : eval_x()) y.push_back(target(x));
    return y;
}

RegressionTask make_regression_task(const std::string& name, int freq_m) {
    RegressionTask t;
    if (name == "discontinuous") {
        t.name = name;
        t.target = [](double x) {
            return x < 0.0 ? 0.2 * std::sin(6.0 * x) : 1.0 + 0.1 * x * std::cos(14.0 * x);
        };
        t.lo = -3.0;
        t.hi = 3.0;
        t.n_train = 5;
    } else if (name == "highfreq") {
        t.name = name + "-" + std::to_string(freq_m);
        const double m = freq_m;
        t.target = [m](double x) { return std::sin(m * kPi * x); };
        t.lo = 0.0;
        t.hi = 2.0 * kPi;
        t.n_train = 100;
    } else {
        throw std::invalid_argument("unknown regression task '" + name + "'");
    }
    return t;
}

HelmholtzProblem make_helmholtz(const std::string& which) {
    HelmholtzProblem p;
    p.k = 1.0;
    if (which == "base") {
        p.name = which;
        p.exact = [](double x, double y) { return std::sin(kPi * x) * std::sin(4.0 * kPi * y); };
        p.exact_laplacian = [](double x, double y) {
            return -17.0 * kPi * kPi * std::sin(kPi * x) * std::sin(4.0 * kPi * y);
        };
        const double k = p.k;
        // the stated three-term forcing, kept literal
        p.forcing = [k](double x, double y) {
            const double s = std::sin(kPi * x) * std::sin(4.0 * kPi * y);
            return -kPi * kPi * s - (4.0 * kPi) * (4.0 * kPi) * s + k * k * s;
        };
        p.n_residual = 6000;
        p.n_boundary = 300;
    } else if (which == "highfreq") {
        p.name = which;
        p.exact = [](double x, double y) {
            return std::sin(5.0 * kPi * x) * std::sin(10.0 * kPi * y);
        };
        p.exact_laplacian = [](double x, double y) {
            return -125.0 * kPi * kPi * std::sin(5.0 * kPi * x) * std::sin(10.0 * kPi * y);
        };
        const double k = p.k;
        p.forcing = [k](double x, double y) {
            return (k * k - 125.0 * kPi * kPi) * std::sin(5.0 * kPi * x) *
                   std::sin(10.0 * kPi * y);
        };
        p.n_residual = 10000;
        p.n_boundary = 400;
    } else {
        throw std::invalid_argument("unknown helmholtz case '" + which + "'");
    }
    return p;
}

Collocation sample_collocation(int n_residual, int n_boundary, std::uint64_t seed) {
    if (n_residual <= 0 || n_boundary <= 0)
        throw std::invalid_argument("sample_collocation: counts must be positive");
    Rng rng(seed);
    Collocation c;
    c.interior.resize(2 * static_cast<std::size_t>(n_residual));
    for (int i = 0; i < n_residual; ++i) {
        c.interior[2 * static_cast<std::size_t>(i)] = rng.uniform(-1.0, 1.0);
        c.interior[2 * static_cast<std::size_t>(i) + 1] = rng.uniform(-1.0, 1.0);
    }
    c.boundary.resize(2 * static_cast<std::size_t>(n_boundary));
    const int per_edge = n_boundary / 4;
    const int rem = n_boundary % 4;
    int idx = 0;
    for (int e = 0; e < 4; ++e) {
        const int count = per_edge + (e < rem ? 1 : 0);
        for (int i = 0; i < count; ++i, ++idx) {
            const double t = rng.uniform(-1.0, 1.0);
            double x = 0.0, y = 0.0;
            switch (e) {
            case 0: x = -1.0; y = t; break; // left
            case 1: x = 1.0; y = t; break;  // right
            case 2: x = t; y = -1.0; break; // bottom
            case 3: x = t; y = 1.0; break;  // top
            }
            c.boundary[2 * static_cast<std::size_t>(idx)] = x;
            c.boundary[2 * static_cast<std::size_t>(idx) + 1] = y;
        }
    }
    return c;
}

ToyClassificationSet make_two_moons(int n, double noise, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("make_two_moons: n must be >= 2");
    ToyClassificationSet set;
    set.n = n;
    set.X.resize(2 * static_cast<std::size_t>(n));
    set.y.resize(static_cast<std::size_t>(n));
    const int n_out = n / 2;
    const int n_in = n - n_out;
    Rng rng(seed);
    for (int i = 0; i < n_out; ++i) {
        const double t = n_out > 1 ? kPi * i / (n_out - 1) : 0.0;
        set.X[2 * static_cast<std::size_t>(i)] = std::cos(t);
        set.X[2 * static_cast<std::size_t>(i) + 1] = std::sin(t);
        set.y[static_cast<std::size_t>(i)] = 0.0;
    }
    for (int i = 0; i < n_in; ++i) {
        const double t = n_in > 1 ? kPi * i / (n_in - 1) : 0.0;
        const std::size_t j = static_cast<std::size_t>(n_out + i);
        set.X[2 * j] = 1.0 - std::cos(t);
        set.X[2 * j + 1] = 1.0 - std::sin(t) - 0.5;
        set.y[j] = 1.0;
    }
    if (noise > 0.0)
        for (double& v : set.X) v += noise * rng.normal();
    return set;
}

ToyClassificationSet make_two_circles(int n, double noise, double factor, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("make_two_circles: n must be >= 2");
    ToyClassificationSet set;
    set.n = n;
    set.X.resize(2 * static_cast<std::size_t>(n));
    set.y.resize(static_cast<std::size_t>(n));
    const int n_out = n / 2;
    const int n_in = n - n_out;
    Rng rng(seed);
    for (int i = 0; i < n_out; ++i) {
        const double t = 2.0 * kPi * i / n_out;
        set.X[2 * static_cast<std::size_t>(i)] = std::cos(t);
        set.X[2 * static_cast<std::size_t>(i) + 1] = std::sin(t);
        set.y[static_cast<std::size_t>(i)] = 0.0;
    }
    for (int i = 0; i < n_in; ++i) {
        const double t = 2.0 * kPi * i / n_in;
        const std::size_t j = static_cast<std::size_t>(n_out + i);
        set.X[2 * j] = factor * std::cos(t);
        set.X[2 * j + 1] = factor * std::sin(t);
        set.y[j] = 1.0;
    }
    if (noise > 0.0)
        for (double& v : set.X) v += noise * rng.normal();
    return set;
}

double relative_l2_error(std::span<const double> pred, std::span<const double> exact) {
    if (pred.size() != exact.size())
        throw std::invalid_argument("relative_l2_error: grids not aligned");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - exact[i];
        num += d * d;
        den += exact[i] * exact[i];
    }
    if (den == 0.0) throw std::invalid_argument("relative_l2_error: exact norm is zero");
    return std::sqrt(num / den);
}

double accuracy(std::span<const double> logits, std::span<const double> labels) {
    if (logits.size() != labels.size() || logits.empty())
        throw std::invalid_argument("accuracy: size mismatch");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double pred = logits[i] > 0.0 ? 1.0 : 0.0;
        if (pred == labels[i]) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(logits.size());
}

void export_csv(const std::string& path, std::span<const double> X, int dim,
                std::span<const double> y) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    for (int d = 0; d < dim; ++d) os << "x" << d << ",";
    os << "y\n";
    os.precision(17);
    const std::size_t n = y.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (int d = 0; d < dim; ++d) os << X[i * static_cast<std::size_t>(dim) + d] << ",";
        os << y[i] << "\n";
    }
}

CsvData import_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open '" + path + "'");
    CsvData out;
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("empty csv '" + path + "'");
    out.dim = static_cast<int>(std::count(line.begin(), line.end(), ','));
    if (out.dim < 1) throw std::runtime_error("csv '" + path + "': expected x...,y header");
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (static_cast<int>(row.size()) != out.dim + 1)
            throw std::runtime_error("csv '" + path + "': ragged row");
        for (int d = 0; d < out.dim; ++d) out.X.push_back(row[static_cast<std::size_t>(d)]);
        out.y.push_back(row.back());
        ++out.n;
    }
    return out;
}

} // namespace kronnet::data
