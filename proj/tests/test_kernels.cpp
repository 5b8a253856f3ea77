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

#include "kronnet/kernels.hpp"
#include "kronnet/rng.hpp"

#include <cmath>

using namespace kronnet;
using kern::Backend;
using kern::LossKind;

namespace {

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-10);
}

double max_rel_diff(std::span<const double> a, std::span<const double> b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-8});
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    return worst;
}

KnnModel random_model(Rng& rng, std::vector<int> widths, const std::string& scheme,
                      Act base, double scale) {
    SchemeSpec spec = parse_scheme(scheme);
    spec.base = base;
    spec.scale = scale;
    KnnModel m = init_model(widths, spec, InitScheme::practice, rng.next_u64());
    for (KnnLayer& l : m.layers) {
        for (double& a : l.adaptive.alpha) a = rng.uniform(-0.8, 0.8);
        for (double& w : l.adaptive.omega) w = rng.uniform(0.2, 1.2);
    }
    return m;
}

} // namespace

TEST_CASE("fused first-order gradients match the tape reference") {
    Rng rng(2024);
    kern::Workspace ws;
    for (int trial = 0; trial < 8; ++trial) {
        KnnModel m = random_model(rng, {2, 5, 4, 1},
                                  trial % 2 ? "rowdy3" : "llaaf",
                                  trial % 3 ? Act::tanh : Act::sin, 2.0);
        const std::size_t n = 7;
        std::vector<double> X(n * 2), Y(n);
        for (double& v : X) v = rng.uniform(-1.0, 1.0);
        for (double& v : Y) v = rng.uniform(-1.0, 1.0);
        const std::size_t P = param_count(m);
        std::vector<double> g_fused(P), g_tape(P);
        for (LossKind kind : {LossKind::square_sum, LossKind::bce_mean, LossKind::mean_sq}) {
            std::vector<double> y = Y;
            if (kind == LossKind::bce_mean)
                for (double& v : y) v = v > 0.0 ? 1.0 : 0.0;
            const double lf =
                kern::loss_grad_first_order(m, X, y, n, kind, g_fused, ws, Backend::fused);
            const double lt =
                kern::loss_grad_first_order(m, X, y, n, kind, g_tape, ws, Backend::tape);
            CHECK(rel_err(lf, lt) < 1e-12);
            CHECK(max_rel_diff(g_fused, g_tape) < 1e-11);
        }
    }
}

TEST_CASE("fused first-order gradient matches central differences") {
    Rng rng(606);
    kern::Workspace ws;
    KnnModel m = random_model(rng, {1, 6, 1}, "rowdy3", Act::cos, 3.0);
    const std::size_t n = 5;
    std::vector<double> X(n), Y(n);
    for (double& v : X) v = rng.uniform(-2.0, 2.0);
    for (double& v : Y) v = rng.uniform(-1.0, 1.0);
    const std::size_t P = param_count(m);
    std::vector<double> g(P);
    kern::loss_grad_first_order(m, X, Y, n, LossKind::square_sum, g, ws);
    FlatParams fp = flatten(m);
    for (std::size_t p = 0; p < P; p += 3) { // probe a spread of parameters
        auto f = [&](double v) {
            std::vector<double> th = fp.theta;
            th[p] = v;
            KnnModel mm = m;
            unflatten(mm, th);
            return kern::loss_first_order(mm, X, Y, n, LossKind::square_sum);
        };
        const double h = 1e-5;
        const double fd = (f(fp.theta[p] + h) - f(fp.theta[p] - h)) / (2.0 * h);
        CHECK(rel_err(g[p], fd) < 1e-6);
    }
}

TEST_CASE("fused helmholtz gradients match the tape reference") {
    Rng rng(81);
    kern::Workspace ws;
    for (int trial = 0; trial < 4; ++trial) {
        KnnModel m = random_model(rng, {2, 4, 4, 1}, "rowdy3", Act::tanh, 2.0);
        const std::size_t nr = 6, nb = 4;
        std::vector<double> Xr(2 * nr), F(nr), Xb(2 * nb);
        for (double& v : Xr) v = rng.uniform(-1.0, 1.0);
        for (double& v : F) v = rng.uniform(-3.0, 3.0);
        for (std::size_t i = 0; i < nb; ++i) {
            Xb[2 * i] = 1.0;
            Xb[2 * i + 1] = rng.uniform(-1.0, 1.0);
        }
        const std::size_t P = param_count(m);
        std::vector<double> g_fused(P), g_tape(P);
        const double lf = kern::loss_grad_helmholtz(m, Xr, F, nr, 1.0, Xb, nb, 1.0, 1.0, g_fused,
                                                    ws, Backend::fused);
        const double lt = kern::loss_grad_helmholtz(m, Xr, F, nr, 1.0, Xb, nb, 1.0, 1.0, g_tape,
                                                    ws, Backend::tape);
        CHECK(rel_err(lf, lt) < 1e-12);
        CHECK(max_rel_diff(g_fused, g_tape) < 1e-10);
    }
}

TEST_CASE("helmholtz gradient matches central differences") {
    Rng rng(17);
    kern::Workspace ws;
    KnnModel m = random_model(rng, {2, 3, 1}, "rowdy2", Act::tanh, 1.0);
    const std::size_t nr = 4, nb = 2;
    std::vector<double> Xr(2 * nr), F(nr, 0.5), Xb = {1.0, 0.2, -1.0, 0.7};
    for (double& v : Xr) v = rng.uniform(-0.9, 0.9);
    const std::size_t P = param_count(m);
    std::vector<double> g(P);
    kern::loss_grad_helmholtz(m, Xr, F, nr, 1.0, Xb, nb, 1.0, 1.0, g, ws);
    FlatParams fp = flatten(m);
    for (std::size_t p = 0; p < P; ++p) {
        auto f = [&](double v) {
            std::vector<double> th = fp.theta;
            th[p] = v;
            KnnModel mm = m;
            unflatten(mm, th);
            return kern::loss_helmholtz(mm, Xr, F, nr, 1.0, Xb, nb, 1.0, 1.0);
        };
        const double h = 1e-5;
        const double fd = (f(fp.theta[p] + h) - f(fp.theta[p] - h)) / (2.0 * h);
        CHECK(rel_err(g[p], fd) < 1e-5);
    }
}

TEST_CASE("helmholtz loss rejects kink activations") {
    Rng rng(3);
    kern::Workspace ws;
    KnnModel m = random_model(rng, {2, 3, 1}, "rowdy2", Act::relu, 1.0);
    std::vector<double> Xr = {0.1, 0.2}, F = {0.0}, Xb = {1.0, 0.0};
    std::vector<double> g(param_count(m));
    CHECK_THROWS_AS(kern::loss_grad_helmholtz(m, Xr, F, 1, 1.0, Xb, 1, 1.0, 1.0, g, ws),
                    std::invalid_argument);
}

TEST_CASE("gradient accumulation is bit-deterministic") {
    Rng rng(404);
    kern::Workspace ws;
    KnnModel m = random_model(rng, {2, 8, 1}, "rowdy4", Act::tanh, 10.0);
    const std::size_t n = 100;
    std::vector<double> X(2 * n), Y(n);
    for (double& v : X) v = rng.uniform(-1.0, 1.0);
    for (double& v : Y) v = rng.uniform(-1.0, 1.0);
    const std::size_t P = param_count(m);
    std::vector<double> g1(P), g2(P);
    const double l1 = kern::loss_grad_first_order(m, X, Y, n, LossKind::square_sum, g1, ws);
    const double l2 = kern::loss_grad_first_order(m, X, Y, n, LossKind::square_sum, g2, ws);
    CHECK(l1 == l2);
    for (std::size_t i = 0; i < P; ++i) CHECK(g1[i] == g2[i]);
}

TEST_CASE("exact helmholtz solution as a two-neuron cosine net has zero residual") {
    // sin(pi x) sin(4 pi y) = (cos(pi x - 4 pi y) - cos(pi x + 4 pi y)) / 2,
    // so the jet path must produce |Delta u + u - f| ~ 0 with
    // f = (1 - 17 pi^2) sin(pi x) sin(4 pi y).
    const double pi = Rng::pi;
    SchemeSpec spec = parse_scheme("ffn");
    spec.base = Act::cos;
    std::vector<int> widths = {2, 2, 1};
    KnnModel m = init_model(widths, spec, InitScheme::practice, 0);
    m.layers[0].W = {pi, -4.0 * pi, pi, 4.0 * pi};
    m.layers[0].b = {0.0, 0.0};
    m.layers[1].W = {0.5, -0.5};
    m.layers[1].b = {0.0};

    Rng rng(555);
    const std::size_t nr = 50;
    std::vector<double> Xr(2 * nr), F(nr);
    for (std::size_t i = 0; i < nr; ++i) {
        const double x = rng.uniform(-1.0, 1.0), y = rng.uniform(-1.0, 1.0);
        Xr[2 * i] = x;
        Xr[2 * i + 1] = y;
        F[i] = (1.0 - 17.0 * pi * pi) * std::sin(pi * x) * std::sin(4.0 * pi * y);
    }
    const double loss = kern::loss_helmholtz(m, Xr, F, nr, 1.0, {}, 0, 1.0, 1.0);
    CHECK(std::sqrt(loss) < 1e-8); // rms residual

    // same through the tape jet path
    ad::Tape tape;
    TapeModel tm = bind_model(tape, m);
    const double xy[2] = {Xr[0], Xr[1]};
    auto jx = jet_forward(tm, xy, 0);
    auto jy = jet_forward(tm, xy, 1);
    ad::Var r = jx[0].d2 + jy[0].d2 + 1.0 * jx[0].v - F[0];
    tape.eval(flatten(m).theta);
    CHECK(std::abs(tape.value(r)) < 1e-8);
}

TEST_CASE("forward_batch agrees with single forward") {
    Rng rng(9);
    KnnModel m = random_model(rng, {3, 6, 2}, "rowdy3", Act::tanh, 1.0);
    const std::size_t n = 37;
    std::vector<double> X(3 * n), U(2 * n);
    for (double& v : X) v = rng.uniform(-1.0, 1.0);
    kern::forward_batch(m, X, n, U);
    for (std::size_t i = 0; i < n; ++i) {
        auto u = forward(m, std::span<const double>(X).subspan(3 * i, 3));
        CHECK(U[2 * i] == u[0]);
        CHECK(U[2 * i + 1] == u[1]);
    }
}
