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

#include "kronnet/tape.hpp"

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace kronnet {

/// Scalar base functions. Derivative conventions at kinks:
/// relu'(0) = 0, elu_neg'(0) = 1 (left branch), elu'(0) = 1.
enum class Act : std::uint8_t {
    identity,
    tanh,
    sin,
    cos,
    relu,
    sigmoid,
    elu,     // x>0 ? x : e^x-1
    elu_neg, // x<=0 ? e^x-1 : 0
    swish,   // x*sigmoid(x)
    poly,    // x^power
};

const char* act_name(Act a);
Act act_from_name(const std::string& name);

namespace detail {

/// f, f', f'', f''' of a base function at t; `order` limits the work.
/// Kink conventions: relu'(0) = 0, elu branches take the t <= 0 side.
inline void base_derivs(Act base, int power, double t, int order, double out[4]) {
    out[0] = out[1] = out[2] = out[3] = 0.0;
    switch (base) {
    case Act::identity:
        out[0] = t;
        if (order >= 1) out[1] = 1.0;
        break;
    case Act::tanh: {
        const double T = std::tanh(t);
        const double s = 1.0 - T * T;
        out[0] = T;
        if (order >= 1) out[1] = s;
        if (order >= 2) out[2] = -2.0 * T * s;
        if (order >= 3) out[3] = (6.0 * T * T - 2.0) * s;
        break;
    }
    case Act::sin: {
        const double S = std::sin(t);
        out[0] = S;
        if (order >= 1) {
            const double C = std::cos(t);
            out[1] = C;
            if (order >= 2) out[2] = -S;
            if (order >= 3) out[3] = -C;
        }
        break;
    }
    case Act::cos: {
        const double C = std::cos(t);
        out[0] = C;
        if (order >= 1) {
            const double S = std::sin(t);
            out[1] = -S;
            if (order >= 2) out[2] = -C;
            if (order >= 3) out[3] = S;
        }
        break;
    }
    case Act::relu:
        out[0] = t > 0.0 ? t : 0.0;
        if (order >= 1) out[1] = t > 0.0 ? 1.0 : 0.0;
        break;
    case Act::sigmoid: {
        const double S = 1.0 / (1.0 + std::exp(-t));
        const double s1 = S * (1.0 - S);
        out[0] = S;
        if (order >= 1) out[1] = s1;
        if (order >= 2) out[2] = s1 * (1.0 - 2.0 * S);
        if (order >= 3) out[3] = s1 * (1.0 - 6.0 * S + 6.0 * S * S);
        break;
    }
    case Act::elu: {
        if (t > 0.0) {
            out[0] = t;
            if (order >= 1) out[1] = 1.0;
        } else {
            const double e = std::exp(t);
            out[0] = e - 1.0;
            if (order >= 1) out[1] = e;
            if (order >= 2) out[2] = e;
            if (order >= 3) out[3] = e;
        }
        break;
    }
    case Act::elu_neg: {
        if (t <= 0.0) {
            const double e = std::exp(t);
            out[0] = e - 1.0;
            if (order >= 1) out[1] = e;
            if (order >= 2) out[2] = e;
            if (order >= 3) out[3] = e;
        }
        break;
    }
    case Act::swish: {
        const double S = 1.0 / (1.0 + std::exp(-t));
        const double s1 = S * (1.0 - S);
        const double s2 = s1 * (1.0 - 2.0 * S);
        const double s3 = s1 * (1.0 - 6.0 * S + 6.0 * S * S);
        out[0] = t * S;
        if (order >= 1) out[1] = S + t * s1;
        if (order >= 2) out[2] = 2.0 * s1 + t * s2;
        if (order >= 3) out[3] = 3.0 * s2 + t * s3;
        break;
    }
    case Act::poly: {
        const int p = power;
        auto ipow = [](double x, int n) {
            double r = 1.0;
            for (int i = 0; i < n; ++i) r *= x;
            return r;
        };
        out[0] = ipow(t, p);
        if (order >= 1 && p >= 1) out[1] = p * ipow(t, p - 1);
        if (order >= 2 && p >= 2) out[2] = double(p) * (p - 1) * ipow(t, p - 2);
        if (order >= 3 && p >= 3) out[3] = double(p) * (p - 1) * (p - 2) * ipow(t, p - 3);
        break;
    }
    }
}

} // namespace detail

/// One family member: psi(t) = amp * f(freq * t), f = base (poly uses power).
/// Rowdy slot k>=2 with scaling factor n is amp=n, freq=(k-1)*n, base=sin;
/// the base slot under the n*omega=1 convention is amp=1, freq=n.
struct Slot {
    Act base = Act::identity;
    double amp = 1.0;
    double freq = 1.0;
    int power = 1;

    /// psi and derivatives up to `order` (0..3) at t.
    void eval(double t, int order, double out[4]) const {
        detail::base_derivs(base, power, freq * t, order, out);
        double fj = amp;
        for (int j = 0; j <= order; ++j) {
            out[j] *= fj;
            fj *= freq;
        }
        for (int j = order + 1; j < 4; ++j) out[j] = 0.0;
    }

    /// Same as eval(omega * z, ...) but with the argument grouped as
    /// (freq * omega) * z, so freq * omega == 1 reproduces the base
    /// activation bit-exactly at init.
    void eval_scaled(double omega, double z, int order, double out[4]) const {
        detail::base_derivs(base, power, (freq * omega) * z, order, out);
        double fj = amp;
        for (int j = 0; j <= order; ++j) {
            out[j] *= fj;
            fj *= freq;
        }
        for (int j = order + 1; j < 4; ++j) out[j] = 0.0;
    }

    bool kink() const { return base == Act::relu || base == Act::elu || base == Act::elu_neg; }
    bool c1() const { return base != Act::relu; }
    /// sup |psi| when bounded, +inf otherwise.
    double bound() const;

    std::string label() const;
};

struct ActivationFamily {
    std::vector<Slot> slots;

    int size() const { return static_cast<int>(slots.size()); }
    bool has_kink() const;
    bool all_c1() const;
    /// Largest slot bound; +inf if any slot is unbounded.
    double bound() const;
    std::vector<std::string> labels() const;
};

/// Per-layer amplitudes and frequencies with per-entry trainability, the
/// fixed/trainable table of the three schemes made explicit.
struct AdaptiveParams {
    std::vector<double> alpha;
    std::vector<double> omega;
    std::vector<std::uint8_t> alpha_trainable;
    std::vector<std::uint8_t> omega_trainable;

    int size() const { return static_cast<int>(alpha.size()); }
};

enum class SchemeKind : std::uint8_t {
    ffn,
    fixed,
    llaaf,
    rowdy,
    prelu,
    elu,
    selu,
    slaf,
    knn1,
    knn2,
    knn3,
};

struct RowdyConfig {
    Act base = Act::tanh;
    int terms = 2;         // K
    double scale = 1.0;    // n >= 1
    bool cosine = false;   // sine harmonics by default
    bool literal_omega_init = false; // raw omega_k = 1 for k>=2 instead of 1/n
};

/// Scheme selected by string key, e.g. "rowdy5", "llaaf", "knn3".
struct SchemeSpec {
    SchemeKind kind = SchemeKind::fixed;
    Act base = Act::tanh;
    int terms = 1;
    double scale = 1.0;
    bool cosine = false;
    bool literal_omega_init = false;

    std::string name() const;
};

SchemeSpec parse_scheme(const std::string& key);

/// Family + init params realizing the named special case exactly as the
/// corresponding bullet list item / trainability table row.
struct FamilyInit {
    ActivationFamily family;
    AdaptiveParams params;
};

FamilyInit make_special_case(const SchemeSpec& spec);

/// Rowdy init: alpha_1 = 1 fixed, alpha_k = 0 trainable; every trainable
/// omega starts at 1/n (n*omega = 1), or at 1 for k>=2 under the literal
/// flag. The initial activation equals the base activation.
AdaptiveParams rowdy_init(const ActivationFamily& family, const RowdyConfig& config);

/// sum_k alpha_k psi_k(omega_k z). Throws on dimension mismatch.
double adaptive_eval(const ActivationFamily& family, const AdaptiveParams& params, double z);

/// Value and z-derivatives of the adaptive sum: out[j] = d^j/dz^j, j<=order.
void adaptive_derivs(const ActivationFamily& family, std::span<const double> alpha,
                     std::span<const double> omega, double z, int order, double out[4]);

// Tape builders. alpha/omega are tape nodes so their gradients flow.
ad::Var adaptive_apply(const ActivationFamily& family, std::span<const ad::Var> alpha,
                       std::span<const ad::Var> omega, ad::Var z);
ad::Jet2 adaptive_apply_jet(const ActivationFamily& family, std::span<const ad::Var> alpha,
                            std::span<const ad::Var> omega, const ad::Jet2& z);

/// Base function applied on the tape (value only).
ad::Var act_apply(Act base, int power, ad::Var t);

/// K x m matrix [phi_k(z_j)] used by the Assumption-on-activations rank
/// check; rows are the family slots evaluated at unit alpha/omega.
std::vector<double> family_matrix(const ActivationFamily& family, std::span<const double> z);

} // namespace kronnet
