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
#include "kronnet/theory.hpp"
#include "kronnet/training.hpp"

#include <cmath>

using namespace kronnet;
using namespace kronnet::train;

namespace {

KnnModel small_model(std::uint64_t seed, const std::string& scheme = "rowdy3",
                     Act base = Act::tanh, double n = 1.0) {
    SchemeSpec spec = parse_scheme(scheme);
    spec.base = base;
    spec.scale = n;
    std::vector<int> widths = {1, 6, 1};
    return init_model(widths, spec, InitScheme::practice, seed);
}

TrainData line_data(int n, std::uint64_t seed) {
    TrainData d;
    Rng rng(seed);
    d.n = n;
    for (int i = 0; i < n; ++i) {
        const double x = rng.uniform(-1.0, 1.0);
        d.X.push_back(x);
        d.Y.push_back(0.3 * x - 0.2);
    }
    return d;
}

} // namespace

TEST_CASE("square loss values") {
    // single point, u = 3, y = 1: loss = 1/2 * 4 = 2
    KnnModel m = small_model(1, "ffn");
    m.layers[0].W.assign(m.layers[0].W.size(), 0.0);
    m.layers[0].b.assign(m.layers[0].b.size(), 0.0);
    m.layers[1].W.assign(m.layers[1].W.size(), 0.0);
    m.layers[1].b = {3.0};
    TrainData d;
    d.n = 1;
    d.X = {0.5};
    d.Y = {1.0};
    kern::Workspace ws;
    LossSpec ls;
    auto [L, g] = compute_loss(m, d, ls, ws);
    CHECK(L == 2.0);

    // perfect fit: zero loss, zero gradients
    d.Y = {3.0};
    auto [L2, g2] = compute_loss(m, d, ls, ws);
    CHECK(L2 == 0.0);
    for (double v : g2) CHECK(v == 0.0);
}

TEST_CASE("pinn loss of the analytically injected exact solution") {
    // two cosine neurons represent sin(pi x) sin(4 pi y) exactly; the
    // residual term through the jet path is ~0 while the boundary term is 0
    const double pi = Rng::pi;
    SchemeSpec spec = parse_scheme("ffn");
    spec.base = Act::cos;
    std::vector<int> widths = {2, 2, 1};
    KnnModel m = init_model(widths, spec, InitScheme::practice, 0);
    m.layers[0].W = {pi, -4.0 * pi, pi, 4.0 * pi};
    m.layers[0].b = {0.0, 0.0};
    m.layers[1].W = {0.5, -0.5};
    m.layers[1].b = {0.0};

    data::HelmholtzProblem prob = data::make_helmholtz("base");
    data::Collocation col = data::sample_collocation(64, 16, 3);
    TrainData d;
    d.Xres = col.interior;
    d.n_res = 64;
    d.Xbnd = col.boundary;
    d.n_bnd = 16;
    for (int i = 0; i < d.n_res; ++i)
        d.Fres.push_back(prob.forcing(col.interior[2 * static_cast<std::size_t>(i)],
                                      col.interior[2 * static_cast<std::size_t>(i) + 1]));
    kern::Workspace ws;
    LossSpec ls;
    ls.kind = LossType::pinn;
    auto [L, g] = compute_loss(m, d, ls, ws);
    CHECK(L < 1e-16); // mean squared residual < 1e-8^2
}

TEST_CASE("pinn loss rejects kink activations") {
    KnnModel m = small_model(1, "rowdy2", Act::relu);
    TrainData d;
    d.Xres = {0.1, 0.2};
    d.Fres = {0.0};
    d.n_res = 1;
    kern::Workspace ws;
    LossSpec ls;
    ls.kind = LossType::pinn;
    CHECK_THROWS_AS(compute_loss(m, d, ls, ws), std::invalid_argument);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
    KnnModel m = small_model(5);
    const FlatParams before = flatten(m);
    TrainData d = line_data(8, 3);
    OptimizerSpec opt;
    opt.kind = OptKind::gd;
    opt.lr = 0.0;
    opt.iterations = 25;
    RunRecord rec = kronnet::train::train(m, d, opt, LossSpec{}, Schedule{}, 7);
    const FlatParams after = flatten(m);
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(before.theta[i] == after.theta[i]);
    for (std::size_t i = 1; i < rec.losses.size(); ++i) CHECK(rec.losses[i] == rec.losses[0]);
}

TEST_CASE("one-parameter quadratic decays geometrically under gd") {
    // L = 1/2 (b - y)^2 with only the output bias active:
    // b_{k+1} - y = (1 - lr)(b_k - y), loss ratio (1 - lr)^2
    KnnModel m = small_model(2, "ffn");
    for (KnnLayer& l : m.layers) {
        std::fill(l.W.begin(), l.W.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
        l.w_trainable = 0;
        l.b_trainable = 0;
    }
    m.layers.back().b_trainable = 1;
    TrainData d;
    d.n = 1;
    d.X = {0.0};
    d.Y = {1.0};
    OptimizerSpec opt;
    opt.kind = OptKind::gd;
    opt.lr = 0.1;
    opt.iterations = 20;
    RunRecord rec = kronnet::train::train(m, d, opt, LossSpec{}, Schedule{}, 1);
    for (std::size_t i = 1; i < rec.losses.size(); ++i)
        CHECK(rec.losses[i] == doctest::Approx(rec.losses[i - 1] * 0.81).epsilon(1e-12));
}

TEST_CASE("full-batch gd step equals one euler flow step") {
    // shared dynamics: theta <- theta - eta * grad with eta = dt
    using namespace kronnet::theory;
    Rng rng(9);
    TwoLayerModel tm = init_two_layer(4, 2, small_model(0).family, 17);
    TheoryData td = make_theory_data(3, 2, 18);
    const double dt = 1e-3;
    TwoLayerModel flowed = tm;
    euler_flow(flowed, td, Regime::knn_all, dt, 1);

    KnnModel km = to_knn_model(tm);
    TrainData d;
    d.n = td.m;
    d.din = 2;
    for (int j = 0; j < td.m; ++j) {
        d.X.push_back(td.X[static_cast<std::size_t>(j) * 3]);
        d.X.push_back(td.X[static_cast<std::size_t>(j) * 3 + 1]);
        d.Y.push_back(td.y[static_cast<std::size_t>(j)]);
    }
    // the mapped model's output bias has no theory counterpart; freeze it
    km.layers[1].b_trainable = 0;
    OptimizerSpec opt;
    opt.kind = OptKind::gd;
    opt.lr = dt;
    opt.iterations = 1;
    kronnet::train::train(km, d, opt, LossSpec{}, Schedule{}, 1);

    KnnModel want = to_knn_model(flowed);
    const FlatParams got_fp = flatten(km), want_fp = flatten(want);
    for (std::size_t i = 0; i < got_fp.size(); ++i)
        CHECK(got_fp.theta[i] == doctest::Approx(want_fp.theta[i]).epsilon(1e-9));
}

TEST_CASE("adam first step magnitude is lr regardless of gradient scale") {
    for (double scale : {1e-6, 1.0, 1e6}) {
        AdamState st;
        std::vector<double> theta = {0.0};
        std::vector<double> grad = {scale};
        FlatParams layout;
        layout.theta = theta;
        layout.kind = {ParamKind::weight};
        layout.trainable = {1};
        OptimizerSpec opt;
        opt.lr = 0.01;
        adam_step(st, theta, grad, layout, opt);
        CHECK(std::abs(theta[0]) == doctest::Approx(opt.lr).epsilon(1e-6));
    }
    // zero gradient, zero decay: state unchanged
    AdamState st;
    std::vector<double> theta = {0.7};
    std::vector<double> grad = {0.0};
    FlatParams layout;
    layout.theta = theta;
    layout.kind = {ParamKind::weight};
    layout.trainable = {1};
    OptimizerSpec opt;
    adam_step(st, theta, grad, layout, opt);
    CHECK(theta[0] == 0.7);
}

TEST_CASE("sgd momentum accumulation follows the geometric law") {
    // constant gradient g: displacement after n steps is
    // lr * g * sum_{j<=n} (1 - mu^j) / (1 - mu)
    const double mu = 0.8, lr = 0.1, g = 2.0;
    SgdState st;
    std::vector<double> theta = {0.0};
    FlatParams layout;
    layout.theta = theta;
    layout.kind = {ParamKind::weight};
    layout.trainable = {1};
    OptimizerSpec opt;
    opt.kind = OptKind::sgd_momentum;
    opt.lr = lr;
    opt.momentum = mu;
    std::vector<double> grad = {g};
    double want = 0.0, vel = 0.0;
    for (int n = 1; n <= 10; ++n) {
        sgd_step(st, theta, grad, layout, opt);
        vel = mu * vel + g;
        want -= lr * vel;
        CHECK(theta[0] == doctest::Approx(want).epsilon(1e-12));
    }
    // the velocity approaches g/(1-mu); displacement increments approach lr*g/(1-mu)
    CHECK(vel == doctest::Approx(g * (1.0 - std::pow(mu, 10)) / (1.0 - mu)).epsilon(1e-12));
}

TEST_CASE("weight decay applies to W and b only") {
    std::vector<double> theta = {1.0, 1.0, 1.0, 1.0};
    std::vector<double> grad = {0.0, 0.0, 0.0, 0.0};
    FlatParams layout;
    layout.theta = theta;
    layout.kind = {ParamKind::weight, ParamKind::bias, ParamKind::alpha, ParamKind::omega};
    layout.trainable = {1, 1, 1, 1};
    OptimizerSpec opt;
    opt.kind = OptKind::sgd_momentum;
    opt.lr = 0.5;
    opt.momentum = 0.0;
    opt.weight_decay = 0.1;
    SgdState st;
    sgd_step(st, theta, grad, layout, opt);
    CHECK(theta[0] == 1.0 - 0.5 * 0.1);
    CHECK(theta[1] == 1.0 - 0.5 * 0.1);
    CHECK(theta[2] == 1.0); // alpha untouched
    CHECK(theta[3] == 1.0); // omega untouched
}

TEST_CASE("masks are respected bit-exactly through a training run") {
    KnnModel m = small_model(11, "rowdy3", Act::tanh, 10.0);
    const FlatParams before = flatten(m);
    TrainData d = line_data(16, 5);
    OptimizerSpec opt;
    opt.kind = OptKind::adam;
    opt.lr = 1e-2;
    opt.iterations = 50;
    opt.batch = 4;
    kronnet::train::train(m, d, opt, LossSpec{}, Schedule{}, 3);
    const FlatParams after = flatten(m);
    bool any_moved = false;
    for (std::size_t i = 0; i < before.size(); ++i) {
        if (!before.trainable[i])
            CHECK(after.theta[i] == before.theta[i]);
        else if (after.theta[i] != before.theta[i])
            any_moved = true;
    }
    CHECK(any_moved);
}

TEST_CASE("identical seed and config give identical histories") {
    auto go = [&]() {
        KnnModel m = small_model(21, "rowdy3", Act::tanh, 10.0);
        TrainData d = line_data(32, 8);
        OptimizerSpec opt;
        opt.kind = OptKind::adam;
        opt.lr = 1e-2;
        opt.iterations = 40;
        opt.batch = 8;
        return kronnet::train::train(m, d, opt, LossSpec{}, Schedule{}, 99);
    };
    RunRecord a = go(), b = go();
    REQUIRE(a.losses.size() == b.losses.size());
    for (std::size_t i = 0; i < a.losses.size(); ++i) CHECK(a.losses[i] == b.losses[i]);
}

TEST_CASE("gradient of the full pinn composite matches finite differences") {
    KnnModel m = small_model(31, "rowdy2", Act::tanh, 2.0);
    // reshape to 2-d input
    m = init_model(std::vector<int>{2, 4, 1}, m.scheme, InitScheme::practice, 31);
    TrainData d;
    data::Collocation col = data::sample_collocation(5, 3, 7);
    d.Xres = col.interior;
    d.n_res = 5;
    d.Xbnd = col.boundary;
    d.n_bnd = 3;
    d.Fres.assign(5, 0.3);
    kern::Workspace ws;
    LossSpec ls;
    ls.kind = LossType::pinn;
    ls.w_residual = 0.7;
    ls.w_boundary = 1.3;
    auto [L, g] = compute_loss(m, d, ls, ws);
    FlatParams fp = flatten(m);
    for (std::size_t p = 0; p < fp.size(); ++p) {
        auto f = [&](double v) {
            std::vector<double> th = fp.theta;
            th[p] = v;
            KnnModel mm = m;
            unflatten(mm, th);
            auto [LL, gg] = compute_loss(mm, d, ls, ws);
            (void)gg;
            return LL;
        };
        const double h = 1e-5;
        const double fd = (f(fp.theta[p] + h) - f(fp.theta[p] - h)) / (2.0 * h);
        CHECK(std::abs(g[p] - fd) / std::max(std::abs(fd), 1e-8) < 1e-5);
    }
}

TEST_CASE("schedule transition keeps the function, freezes fluctuations") {
    KnnModel m = small_model(41, "rowdy3", Act::tanh, 10.0);
    // pretend training moved the adaptive parameters
    Rng rng(4);
    for (KnnLayer& l : m.layers)
        for (std::size_t k = 0; k < l.adaptive.alpha.size(); ++k) {
            l.adaptive.alpha[k] = rng.uniform(-0.5, 0.5);
            l.adaptive.omega[k] = rng.uniform(0.05, 0.3);
        }
    KnnModel frozen = m;
    SchemeSpec to = parse_scheme("llaaf");
    to.base = Act::tanh;
    to.scale = 10.0;
    apply_schedule_transition(frozen, to, false);
    // function preserved
    for (double x : {-0.7, 0.1, 2.0})
        CHECK(forward(frozen, std::vector<double>{x})[0] == forward(m, std::vector<double>{x})[0]);
    // only omega_1 still trainable
    for (const KnnLayer& l : frozen.layers) {
        for (std::size_t k = 0; k < l.adaptive.alpha.size(); ++k) {
            CHECK_FALSE(l.adaptive.alpha_trainable[k]);
            CHECK(l.adaptive.omega_trainable[k] == (k == 0 ? 1 : 0));
        }
    }
    // zeroing variant nulls the fluctuation amplitudes
    KnnModel zeroed = m;
    apply_schedule_transition(zeroed, to, true);
    for (const KnnLayer& l : zeroed.layers)
        for (std::size_t k = 1; k < l.adaptive.alpha.size(); ++k)
            CHECK(l.adaptive.alpha[k] == 0.0);

    // llaaf -> llaaf is the identity
    KnnModel ll = init_model(std::vector<int>{1, 4, 1}, to, InitScheme::practice, 5);
    KnnModel ll2 = ll;
    apply_schedule_transition(ll2, to, false);
    CHECK(flatten(ll2).theta == flatten(ll).theta);

    // incompatible base rejected
    SchemeSpec bad = parse_scheme("llaaf");
    bad.base = Act::cos;
    CHECK_THROWS_AS(apply_schedule_transition(m, bad, false), std::invalid_argument);
}

TEST_CASE("non-finite loss stops the run with a diagnostic") {
    KnnModel m = small_model(51, "ffn");
    TrainData d = line_data(4, 2);
    OptimizerSpec opt;
    opt.kind = OptKind::gd;
    opt.lr = 1e60; // guaranteed blow-up
    opt.iterations = 50;
    RunRecord rec = kronnet::train::train(m, d, opt, LossSpec{}, Schedule{}, 1);
    CHECK(rec.early_stop);
    CHECK(rec.stop_reason.find("non-finite") != std::string::npos);
    CHECK(rec.iters.size() < 50);
}
