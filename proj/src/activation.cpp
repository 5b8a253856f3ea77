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

#include "kronnet/activation.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <stdexcept>

namespace kronnet {

namespace {

constexpr double kSeluLambda = 1.0507009873554804934193349852946;
constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

} // namespace

const char* act_name(Act a) {
    switch (a) {
    case Act::identity: return "identity";
    case Act::tanh: return "tanh";
    case Act::sin: return "sin";
    case Act::cos: return "cos";
    case Act::relu: return "relu";
    case Act::sigmoid: return "sigmoid";
    case Act::elu: return "elu";
    case Act::elu_neg: return "elu_neg";
    case Act::swish: return "swish";
    case Act::poly: return "poly";
    }
    return "?";
}

Act act_from_name(const std::string& name) {
    for (Act a : {Act::identity, Act::tanh, Act::sin, Act::cos, Act::relu, Act::sigmoid,
                  Act::elu, Act::elu_neg, Act::swish, Act::poly}) {
        if (name == act_name(a)) return a;
    }
    throw std::invalid_argument("unknown activation '" + name + "'");
}

double Slot::bound() const {
    switch (base) {
    case Act::tanh: return std::abs(amp);
    case Act::sin:
    case Act::cos: return std::abs(amp);
    case Act::sigmoid: return std::abs(amp);
    default: return std::numeric_limits<double>::infinity();
    }
}

std::string Slot::label() const {
    std::string s = act_name(base);
    if (base == Act::poly) s += "^" + std::to_string(power);
    if (amp != 1.0) s = std::to_string(amp) + "*" + s;
    if (freq != 1.0) s += "(" + std::to_string(freq) + "t)";
    return s;
}

bool ActivationFamily::has_kink() const {
    return std::any_of(slots.begin(), slots.end(), [](const Slot& s) { return s.kink(); });
}

bool ActivationFamily::all_c1() const {
    return std::all_of(slots.begin(), slots.end(), [](const Slot& s) { return s.c1(); });
}

double ActivationFamily::bound() const {
    double b = 0.0;
    for (const Slot& s : slots) b = std::max(b, s.bound());
    return b;
}

std::vector<std::string> ActivationFamily::labels() const {
    std::vector<std::string> out;
    out.reserve(slots.size());
    for (const Slot& s : slots) out.push_back(s.label());
    return out;
}

std::string SchemeSpec::name() const {
    switch (kind) {
    case SchemeKind::ffn: return "ffn";
    case SchemeKind::fixed: return "fixed";
    case SchemeKind::llaaf: return "llaaf";
    case SchemeKind::rowdy: return "rowdy" + std::to_string(terms);
    case SchemeKind::prelu: return "prelu";
    case SchemeKind::elu: return "elu";
    case SchemeKind::selu: return "selu";
    case SchemeKind::slaf: return "slaf" + std::to_string(terms);
    case SchemeKind::knn1: return "knn1";
    case SchemeKind::knn2: return "knn2";
    case SchemeKind::knn3: return "knn3";
    }
    return "?";
}

SchemeSpec parse_scheme(const std::string& key) {
    auto split = [&](const std::string& prefix, int def) -> int {
        const std::string digits = key.substr(prefix.size());
        if (digits.empty()) return def;
        for (char c : digits)
            if (!std::isdigit(static_cast<unsigned char>(c)))
                throw std::invalid_argument("unknown scheme '" + key + "'");
        return std::stoi(digits);
    };
    SchemeSpec s;
    if (key == "ffn") {
        s.kind = SchemeKind::ffn;
    } else if (key == "fixed") {
        s.kind = SchemeKind::fixed;
    } else if (key == "llaaf") {
        s.kind = SchemeKind::llaaf;
    } else if (key.rfind("rowdy", 0) == 0) {
        s.kind = SchemeKind::rowdy;
        s.terms = split("rowdy", 2);
    } else if (key == "prelu") {
        s.kind = SchemeKind::prelu;
        s.terms = 2;
    } else if (key == "elu") {
        s.kind = SchemeKind::elu;
        s.terms = 2;
    } else if (key == "selu") {
        s.kind = SchemeKind::selu;
        s.terms = 2;
    } else if (key.rfind("slaf", 0) == 0) {
        s.kind = SchemeKind::slaf;
        s.terms = split("slaf", 3);
    } else if (key == "knn1") {
        s.kind = SchemeKind::knn1;
        s.terms = 9;
        s.base = Act::cos;
    } else if (key == "knn2") {
        s.kind = SchemeKind::knn2;
        s.terms = 9;
        s.base = Act::cos;
    } else if (key == "knn3") {
        s.kind = SchemeKind::knn3;
        s.terms = 9;
        s.base = Act::cos;
    } else {
        throw std::invalid_argument("unknown scheme '" + key + "'");
    }
    if (s.terms < 1) throw std::invalid_argument("scheme '" + key + "': K must be >= 1");
    return s;
}

namespace {

AdaptiveParams all_fixed(std::vector<double> alpha, std::vector<double> omega) {
    AdaptiveParams p;
    p.alpha = std::move(alpha);
    p.omega = std::move(omega);
    p.alpha_trainable.assign(p.alpha.size(), 0);
    p.omega_trainable.assign(p.omega.size(), 0);
    return p;
}

FamilyInit make_rowdy_like(const SchemeSpec& spec, Act fluct_base, double fluct_amp,
                           bool harmonic_freq) {
    const int K = spec.terms;
    const double n = spec.scale;
    FamilyInit fi;
    fi.family.slots.push_back(Slot{spec.base, 1.0, n, 1});
    for (int k = 2; k <= K; ++k) {
        const double freq = harmonic_freq ? (k - 1) * n : 1.0;
        fi.family.slots.push_back(Slot{fluct_base, fluct_amp, freq, 1});
    }
    RowdyConfig rc;
    rc.base = spec.base;
    rc.terms = K;
    rc.scale = n;
    rc.cosine = spec.cosine;
    rc.literal_omega_init = spec.literal_omega_init;
    fi.params = rowdy_init(fi.family, rc);
    return fi;
}

} // namespace

AdaptiveParams rowdy_init(const ActivationFamily& family, const RowdyConfig& config) {
    const int K = family.size();
    if (K < 1) throw std::invalid_argument("rowdy_init: K must be >= 1");
    if (config.scale < 1.0) throw std::invalid_argument("rowdy_init: scaling factor n must be >= 1");
    AdaptiveParams p;
    p.alpha.assign(K, 0.0);
    p.omega.assign(K, 0.0);
    p.alpha_trainable.assign(K, 1);
    p.omega_trainable.assign(K, 1);
    p.alpha[0] = 1.0;
    p.alpha_trainable[0] = 0; // alpha_1 = 1, fixed
    const double inv_n = 1.0 / config.scale;
    p.omega[0] = inv_n; // n*omega_1 = 1
    for (int k = 1; k < K; ++k) p.omega[k] = config.literal_omega_init ? 1.0 : inv_n;
    return p;
}

FamilyInit make_special_case(const SchemeSpec& spec) {
    switch (spec.kind) {
    case SchemeKind::ffn: {
        FamilyInit fi;
        fi.family.slots.push_back(Slot{spec.base, 1.0, 1.0, 1});
        fi.params = all_fixed({1.0}, {1.0});
        return fi;
    }
    case SchemeKind::fixed: {
        FamilyInit fi;
        fi.family.slots.push_back(Slot{spec.base, 1.0, 1.0, 1});
        fi.params = all_fixed({1.0}, {1.0});
        return fi;
    }
    case SchemeKind::llaaf: {
        FamilyInit fi;
        fi.family.slots.push_back(Slot{spec.base, 1.0, spec.scale, 1});
        fi.params = all_fixed({1.0}, {1.0 / spec.scale});
        fi.params.omega_trainable[0] = 1;
        return fi;
    }
    case SchemeKind::rowdy:
        return make_rowdy_like(spec, spec.cosine ? Act::cos : Act::sin, spec.scale, true);
    case SchemeKind::prelu: {
        // phi_1 = max(x,0), phi_2 = max(-x,0); slope on the negative side
        // is -alpha_2*omega_2 with omega_2 the shared trainable parameter.
        FamilyInit fi;
        fi.family.slots.push_back(Slot{Act::relu, 1.0, 1.0, 1});
        fi.family.slots.push_back(Slot{Act::relu, 1.0, -1.0, 1});
        fi.params = all_fixed({1.0, -1.0}, {1.0, 0.25});
        fi.params.omega_trainable[1] = 1;
        return fi;
    }
    case SchemeKind::elu: {
        FamilyInit fi;
        fi.family.slots.push_back(Slot{Act::relu, 1.0, 1.0, 1});
        fi.family.slots.push_back(Slot{Act::elu_neg, 1.0, 1.0, 1});
        fi.params = all_fixed({1.0, 1.0}, {1.0, 1.0});
        fi.params.omega_trainable[1] = 1;
        return fi;
    }
    case SchemeKind::selu: {
        FamilyInit fi;
        fi.family.slots.push_back(Slot{Act::relu, 1.0, 1.0, 1});
        fi.family.slots.push_back(Slot{Act::elu_neg, 1.0, 1.0, 1});
        fi.params = all_fixed({1.0, kSeluLambda * kSeluAlpha}, {kSeluLambda, 1.0});
        fi.params.omega_trainable[0] = 1;
        fi.params.omega_trainable[1] = 1;
        return fi;
    }
    case SchemeKind::slaf: {
        FamilyInit fi;
        const int K = spec.terms;
        for (int k = 1; k <= K; ++k) fi.family.slots.push_back(Slot{Act::poly, 1.0, 1.0, k - 1});
        std::vector<double> alpha(K, 0.0);
        if (K >= 2)
            alpha[1] = 1.0; // identity map at init
        else
            alpha[0] = 1.0;
        fi.params = all_fixed(alpha, std::vector<double>(K, 1.0));
        fi.params.alpha_trainable.assign(K, 1);
        return fi;
    }
    case SchemeKind::knn1:
        return make_rowdy_like(spec, Act::tanh, 1.0, false);
    case SchemeKind::knn2:
        return make_rowdy_like(spec, Act::relu, 1.0, false);
    case SchemeKind::knn3: {
        FamilyInit fi = make_rowdy_like(spec, Act::tanh, 1.0, false);
        // phi_2..phi_9 as listed; Softmax stands in as logistic sigmoid.
        const Act order[] = {Act::tanh, Act::sigmoid, Act::elu,  Act::relu,
                             Act::tanh, Act::tanh,    Act::sigmoid, Act::swish};
        for (int k = 2; k <= spec.terms && k <= 9; ++k)
            fi.family.slots[static_cast<std::size_t>(k - 1)].base = order[k - 2];
        return fi;
    }
    }
    throw std::invalid_argument("unknown scheme");
}

double adaptive_eval(const ActivationFamily& family, const AdaptiveParams& params, double z) {
    if (params.size() != family.size() ||
        params.omega.size() != static_cast<std::size_t>(family.size())) {
        throw std::invalid_argument("adaptive_eval: params dimensioned " +
                                    std::to_string(params.size()) + ", family has K = " +
                                    std::to_string(family.size()));
    }
    double out[4];
    double acc = 0.0;
    for (int k = 0; k < family.size(); ++k) {
        family.slots[static_cast<std::size_t>(k)].eval_scaled(params.omega[static_cast<std::size_t>(k)], z, 0, out);
        acc += params.alpha[static_cast<std::size_t>(k)] * out[0];
    }
    return acc;
}

void adaptive_derivs(const ActivationFamily& family, std::span<const double> alpha,
                     std::span<const double> omega, double z, int order, double out[4]) {
    out[0] = out[1] = out[2] = out[3] = 0.0;
    double psi[4];
    for (int k = 0; k < family.size(); ++k) {
        const double w = omega[static_cast<std::size_t>(k)];
        family.slots[static_cast<std::size_t>(k)].eval_scaled(w, z, order, psi);
        const double a = alpha[static_cast<std::size_t>(k)];
        double wj = 1.0;
        for (int j = 0; j <= order; ++j) {
            out[j] += a * wj * psi[j];
            wj *= w;
        }
    }
}

ad::Var act_apply(Act base, int power, ad::Var t) {
    using namespace ad;
    switch (base) {
    case Act::identity: return t;
    case Act::tanh: return tanh(t);
    case Act::sin: return sin(t);
    case Act::cos: return cos(t);
    case Act::relu: return relu(t);
    case Act::sigmoid: return sigmoid(t);
    case Act::elu: return relu(t) + elu_neg(t);
    case Act::elu_neg: return elu_neg(t);
    case Act::swish: return t * sigmoid(t);
    case Act::poly: return powi(t, power);
    }
    throw std::invalid_argument("act_apply: bad base");
}

namespace {

// phi, phi', phi'' of the base as tape values; kink conventions match
// base_derivs (relu' via step, one-sided exponential for elu branches).
struct VarTriple {
    ad::Var f0, f1, f2;
};

VarTriple act_apply_d2(Act base, int power, ad::Var t) {
    using namespace ad;
    Tape& tp = *t.tape;
    switch (base) {
    case Act::identity: return {t, tp.constant(1.0), tp.constant(0.0)};
    case Act::tanh: {
        Var T = tanh(t);
        Var s = 1.0 - T * T;
        return {T, s, -2.0 * (T * s)};
    }
    case Act::sin: {
        Var S = sin(t), C = cos(t);
        return {S, C, -S};
    }
    case Act::cos: {
        Var S = sin(t), C = cos(t);
        return {C, -S, -C};
    }
    case Act::relu: return {relu(t), step(t), tp.constant(0.0)};
    case Act::sigmoid: {
        Var S = sigmoid(t);
        Var s1 = S * (1.0 - S);
        return {S, s1, s1 * (1.0 - 2.0 * S)};
    }
    case Act::elu: {
        Var e = exp_neg(t);
        return {relu(t) + elu_neg(t), step(t) + e, e};
    }
    case Act::elu_neg: {
        Var e = exp_neg(t);
        return {elu_neg(t), e, e};
    }
    case Act::swish: {
        Var S = sigmoid(t);
        Var s1 = S * (1.0 - S);
        Var s2 = s1 * (1.0 - 2.0 * S);
        return {t * S, S + t * s1, 2.0 * s1 + t * s2};
    }
    case Act::poly: {
        const int p = power;
        Var f0 = powi(t, p);
        Var f1 = p >= 1 ? static_cast<double>(p) * powi(t, p - 1) : tp.constant(0.0);
        Var f2 = p >= 2 ? static_cast<double>(p * (p - 1)) * powi(t, p - 2) : tp.constant(0.0);
        return {f0, f1, f2};
    }
    }
    throw std::invalid_argument("act_apply_d2: bad base");
}

} // namespace

ad::Var adaptive_apply(const ActivationFamily& family, std::span<const ad::Var> alpha,
                       std::span<const ad::Var> omega, ad::Var z) {
    if (alpha.size() != family.slots.size() || omega.size() != family.slots.size())
        throw std::invalid_argument("adaptive_apply: dimension mismatch");
    ad::Var acc = z.tape->constant(0.0);
    for (std::size_t k = 0; k < family.slots.size(); ++k) {
        const Slot& s = family.slots[k];
        ad::Var t = (omega[k] * s.freq) * z;
        ad::Var f = act_apply(s.base, s.power, t);
        acc = acc + alpha[k] * (f * s.amp);
    }
    return acc;
}

ad::Jet2 adaptive_apply_jet(const ActivationFamily& family, std::span<const ad::Var> alpha,
                            std::span<const ad::Var> omega, const ad::Jet2& z) {
    if (alpha.size() != family.slots.size() || omega.size() != family.slots.size())
        throw std::invalid_argument("adaptive_apply_jet: dimension mismatch");
    ad::Tape& tp = *z.v.tape;
    ad::Jet2 out{tp.constant(0.0), tp.constant(0.0), tp.constant(0.0)};
    for (std::size_t k = 0; k < family.slots.size(); ++k) {
        const Slot& s = family.slots[k];
        ad::Var t = (omega[k] * s.freq) * z.v;
        VarTriple f = act_apply_d2(s.base, s.power, t);
        // psi(omega z) derivatives in z: psi' = amp*freq*f1*omega,
        // psi'' = amp*freq^2*f2*omega^2 (Faa di Bruno, order 2).
        ad::Var w = omega[k];
        ad::Var dz1 = (f.f1 * w) * (s.amp * s.freq);
        ad::Var dz2 = ((f.f2 * (w * w)) * (s.amp * s.freq * s.freq));
        out.v = out.v + alpha[k] * (f.f0 * s.amp);
        out.d1 = out.d1 + alpha[k] * (dz1 * z.d1);
        out.d2 = out.d2 + alpha[k] * (dz2 * (z.d1 * z.d1) + dz1 * z.d2);
    }
    return out;
}

std::vector<double> family_matrix(const ActivationFamily& family, std::span<const double> z) {
    const int K = family.size();
    const int m = static_cast<int>(z.size());
    std::vector<double> phi(static_cast<std::size_t>(K) * m);
    double out[4];
    for (int k = 0; k < K; ++k) {
        for (int j = 0; j < m; ++j) {
            family.slots[static_cast<std::size_t>(k)].eval(z[static_cast<std::size_t>(j)], 0, out);
            phi[static_cast<std::size_t>(k) * m + j] = out[0];
        }
    }
    return phi;
}

} // namespace kronnet
