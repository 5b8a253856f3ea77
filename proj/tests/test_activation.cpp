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

#include "kronnet/activation.hpp"
#include "kronnet/linalg.hpp"
#include "kronnet/rng.hpp"

#include <cmath>

using namespace kronnet;

namespace {

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-12);
}

// direct closed forms used as oracles
double prelu_ref(double x, double a) { return x >= 0.0 ? x : a * x; }
double elu_ref(double x) { return x > 0.0 ? x : std::expm1(x); }
double selu_ref(double x) {
    const double lam = 1.0507009873554804934193349852946;
    const double alf = 1.6732632423543772848170429916717;
    return lam * (x > 0.0 ? x : alf * std::expm1(x));
}

} // namespace

TEST_CASE("fixed tanh at zero") {
    auto fi = make_special_case(parse_scheme("fixed"));
    CHECK(adaptive_eval(fi.family, fi.params, 0.0) == 0.0);
}

TEST_CASE("rowdy init equals the base activation") {
    SchemeSpec spec = parse_scheme("rowdy2");
    spec.base = Act::cos;
    spec.scale = 10.0;
    auto fi = make_special_case(spec);
    // alpha = [1, 0], n*omega_1 = 1: value at 0 is cos(0) = 1
    CHECK(adaptive_eval(fi.family, fi.params, 0.0) == 1.0);

    SchemeSpec r5 = parse_scheme("rowdy5");
    r5.base = Act::tanh;
    r5.scale = 10.0;
    auto fi5 = make_special_case(r5);
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double z = rng.uniform(-4.0, 4.0);
        const double got = adaptive_eval(fi5.family, fi5.params, z);
        const double want = std::tanh(10.0 * fi5.params.omega[0] * z);
        CHECK(got == want); // alpha_{k>=2} = 0 exactly
        CHECK(std::abs(got - std::tanh(z)) < 1e-15);
    }
}

TEST_CASE("rowdy sine zeros at pi") {
    // alpha = ones, omega = ones, n = 1, base tanh:
    // tanh(pi) + sin(pi) + sin(2 pi) = tanh(pi)
    SchemeSpec spec = parse_scheme("rowdy3");
    spec.base = Act::tanh;
    spec.scale = 1.0;
    auto fi = make_special_case(spec);
    fi.params.alpha = {1.0, 1.0, 1.0};
    fi.params.omega = {1.0, 1.0, 1.0};
    const double got = adaptive_eval(fi.family, fi.params, Rng::pi);
    CHECK(rel_err(got, std::tanh(Rng::pi)) < 1e-14);
}

TEST_CASE("adaptive_eval rejects dimension mismatch") {
    auto fi = make_special_case(parse_scheme("rowdy3"));
    fi.params.alpha.pop_back();
    CHECK_THROWS_AS(adaptive_eval(fi.family, fi.params, 0.1), std::invalid_argument);
}

TEST_CASE("ffn special case is the plain base activation") {
    SchemeSpec spec = parse_scheme("ffn");
    spec.base = Act::tanh;
    auto fi = make_special_case(spec);
    CHECK(fi.family.size() == 1);
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        const double z = rng.uniform(-3.0, 3.0);
        CHECK(adaptive_eval(fi.family, fi.params, z) == std::tanh(z));
    }
}

TEST_CASE("prelu matches the direct oracle on a grid") {
    auto fi = make_special_case(parse_scheme("prelu"));
    CHECK(fi.params.omega[1] == 0.25);
    // spot value from the operation contract: z = -2 gives -0.5
    CHECK(adaptive_eval(fi.family, fi.params, -2.0) == -0.5);
    for (int i = 0; i < 100; ++i) {
        const double z = -5.0 + 10.0 * i / 99.0;
        CHECK(rel_err(adaptive_eval(fi.family, fi.params, z), prelu_ref(z, 0.25)) < 1e-12);
    }
}

TEST_CASE("elu and selu match their closed forms to 1e-12") {
    auto e = make_special_case(parse_scheme("elu"));
    auto s = make_special_case(parse_scheme("selu"));
    for (int i = 0; i < 1000; ++i) {
        const double z = -6.0 + 12.0 * i / 999.0;
        CHECK(std::abs(adaptive_eval(e.family, e.params, z) - elu_ref(z)) < 1e-12);
        CHECK(std::abs(adaptive_eval(s.family, s.params, z) - selu_ref(z)) < 1e-12);
    }
    // continuity at 0
    CHECK(std::abs(adaptive_eval(e.family, e.params, 1e-14) -
                   adaptive_eval(e.family, e.params, -1e-14)) < 1e-13);
}

TEST_CASE("slaf is the alpha-weighted monomial sum") {
    SchemeSpec spec = parse_scheme("slaf3");
    auto fi = make_special_case(spec);
    fi.params.alpha = {1.0, 2.0, 3.0};
    // 1*1 + 2*2 + 3*4 = 17 at z = 2
    CHECK(adaptive_eval(fi.family, fi.params, 2.0) == 17.0);
}

TEST_CASE("unknown scheme name rejected") {
    CHECK_THROWS_AS(parse_scheme("mystery"), std::invalid_argument);
    CHECK_THROWS_AS(parse_scheme("rowdyX"), std::invalid_argument);
}

TEST_CASE("rowdy_init conventions") {
    SchemeSpec spec = parse_scheme("rowdy5");
    spec.base = Act::tanh;
    spec.scale = 10.0;
    auto fi = make_special_case(spec);
    const AdaptiveParams& p = fi.params;
    CHECK(p.alpha[0] == 1.0);
    CHECK_FALSE(p.alpha_trainable[0]);
    for (int k = 1; k < 5; ++k) {
        CHECK(p.alpha[static_cast<std::size_t>(k)] == 0.0);
        CHECK(p.alpha_trainable[static_cast<std::size_t>(k)]);
        CHECK(p.omega[static_cast<std::size_t>(k)] == 0.1);
        CHECK(p.omega_trainable[static_cast<std::size_t>(k)]);
    }
    CHECK(p.omega[0] == 0.1); // n*omega_1 = 1

    spec.literal_omega_init = true;
    auto lit = make_special_case(spec);
    for (int k = 1; k < 5; ++k) CHECK(lit.params.omega[static_cast<std::size_t>(k)] == 1.0);

    RowdyConfig bad;
    bad.terms = 0;
    ActivationFamily empty;
    CHECK_THROWS_AS(rowdy_init(empty, bad), std::invalid_argument);
}

TEST_CASE("K=1 rowdy degenerates to a fixed-like single slot") {
    SchemeSpec spec = parse_scheme("rowdy1");
    spec.base = Act::tanh;
    spec.scale = 1.0;
    auto fi = make_special_case(spec);
    CHECK(fi.family.size() == 1);
    volatile double z = 0.7; // keep the oracle out of constant folding
    CHECK(adaptive_eval(fi.family, fi.params, z) == std::tanh(z));
}

TEST_CASE("derivative of the adaptive sum w.r.t. alpha_2 after init") {
    // d adaptive / d alpha_2 at z = 0.5 equals n sin((2-1) n omega_2 z),
    // checked against a central difference in alpha_2.
    SchemeSpec spec = parse_scheme("rowdy3");
    spec.base = Act::tanh;
    spec.scale = 10.0;
    auto fi = make_special_case(spec);
    const double z = 0.5;
    auto eval_alpha2 = [&](double a2) {
        AdaptiveParams p = fi.params;
        p.alpha[1] = a2;
        return adaptive_eval(fi.family, p, z);
    };
    const double h = 1e-6;
    const double fd = (eval_alpha2(h) - eval_alpha2(-h)) / (2.0 * h);
    const double analytic = 10.0 * std::sin(10.0 * fi.params.omega[1] * z);
    CHECK(rel_err(fd, analytic) < 1e-9);
}

TEST_CASE("rowdy fluctuation terms are bounded by n") {
    Rng rng(99);
    for (double n : {1.0, 3.0, 10.0}) {
        SchemeSpec spec = parse_scheme("rowdy6");
        spec.scale = n;
        auto fi = make_special_case(spec);
        for (int k = 1; k < fi.family.size(); ++k) {
            const Slot& s = fi.family.slots[static_cast<std::size_t>(k)];
            CHECK(s.bound() == n);
            double out[4];
            for (int i = 0; i < 200; ++i) {
                s.eval(rng.uniform(-100.0, 100.0), 0, out);
                CHECK(std::abs(out[0]) <= n);
            }
        }
    }
}

TEST_CASE("init identity across fixed, llaaf and rowdy") {
    // all three start as the base activation (1e-15)
    Rng rng(5);
    for (Act base : {Act::tanh, Act::cos}) {
        SchemeSpec fx = parse_scheme("fixed");
        fx.base = base;
        SchemeSpec ll = parse_scheme("llaaf");
        ll.base = base;
        ll.scale = 10.0;
        SchemeSpec rw = parse_scheme("rowdy4");
        rw.base = base;
        rw.scale = 10.0;
        auto f1 = make_special_case(fx), f2 = make_special_case(ll), f3 = make_special_case(rw);
        for (int i = 0; i < 300; ++i) {
            const double z = rng.uniform(-5.0, 5.0);
            const double a = adaptive_eval(f1.family, f1.params, z);
            const double b = adaptive_eval(f2.family, f2.params, z);
            const double c = adaptive_eval(f3.family, f3.params, z);
            CHECK(std::abs(a - b) <= 1e-15 * std::max(1.0, std::abs(a)));
            CHECK(std::abs(a - c) <= 1e-15 * std::max(1.0, std::abs(a)));
        }
    }
}

TEST_CASE("trig family matrix has full numerical rank") {
    // K x m matrix Phi on distinct random points, row-normalized:
    // smallest singular value > 1e-10.
    Rng rng(42);
    SchemeSpec spec = parse_scheme("rowdy6");
    spec.base = Act::tanh;
    spec.scale = 1.0;
    auto fi = make_special_case(spec);
    const int K = fi.family.size();
    for (int trial = 0; trial < 20; ++trial) {
        const int m = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
        std::vector<double> z(static_cast<std::size_t>(m));
        for (double& v : z) v = rng.uniform(-2.0, 2.0);
        std::vector<double> phi = family_matrix(fi.family, z);
        // row normalization
        for (int k = 0; k < K; ++k) {
            double nrm = 0.0;
            for (int j = 0; j < m; ++j) nrm += phi[static_cast<std::size_t>(k) * m + j] *
                                                phi[static_cast<std::size_t>(k) * m + j];
            nrm = std::sqrt(nrm);
            if (nrm > 0.0)
                for (int j = 0; j < m; ++j) phi[static_cast<std::size_t>(k) * m + j] /= nrm;
        }
        auto sv = la::singular_values(phi, K, m);
        CHECK(sv.back() > 1e-10);
    }
}

TEST_CASE("kink flags") {
    auto relu_fam = make_special_case(parse_scheme("prelu"));
    CHECK(relu_fam.family.has_kink());
    CHECK_FALSE(relu_fam.family.all_c1());
    SchemeSpec r = parse_scheme("rowdy3");
    r.base = Act::tanh;
    auto smooth = make_special_case(r);
    CHECK_FALSE(smooth.family.has_kink());
    CHECK(smooth.family.all_c1());
    // the C1 requirement reads per slot: the ELU case carries a ReLU slot
    auto elu_fam = make_special_case(parse_scheme("elu"));
    CHECK(elu_fam.family.has_kink());
    CHECK_FALSE(elu_fam.family.all_c1());
}

TEST_CASE("knn3 slot lineup") {
    auto fi = make_special_case(parse_scheme("knn3"));
    REQUIRE(fi.family.size() == 9);
    CHECK(fi.family.slots[0].base == Act::cos);
    CHECK(fi.family.slots[1].base == Act::tanh);
    CHECK(fi.family.slots[2].base == Act::sigmoid);
    CHECK(fi.family.slots[3].base == Act::elu);
    CHECK(fi.family.slots[4].base == Act::relu);
    CHECK(fi.family.slots[7].base == Act::sigmoid); // softmax stands in as sigmoid
    CHECK(fi.family.slots[8].base == Act::swish);
}

TEST_CASE("slot derivative chain matches finite differences") {
    Rng rng(1234);
    for (Act base : {Act::tanh, Act::sin, Act::cos, Act::sigmoid, Act::swish, Act::poly}) {
        Slot s{base, 2.0, 1.7, 3};
        for (int i = 0; i < 10; ++i) {
            const double t = rng.uniform(-1.0, 1.0);
            double v[4];
            s.eval(t, 3, v);
            const double h = 1e-5;
            double up[4], dn[4];
            s.eval(t + h, 2, up);
            s.eval(t - h, 2, dn);
            CHECK(rel_err((up[0] - dn[0]) / (2 * h), v[1]) < 1e-6);
            CHECK(rel_err((up[1] - dn[1]) / (2 * h), v[2]) < 1e-5);
            CHECK(rel_err((up[2] - dn[2]) / (2 * h), v[3]) < 1e-5);
        }
    }
}
