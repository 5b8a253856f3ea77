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

#include "kronnet/activation.hpp"
#include "kronnet/network.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace kronnet::theory {

/// Two-layer network u(x) = sum_i c_i sum_k alpha_k phi_k(omega_k v_i.x~)
/// with v_i = [w_i; b_i] and the augmented, normalized input
/// x~ = [x; 1/sqrt(2)], |x~| = 1.
struct TwoLayerModel {
    int N = 0; // hidden width
    int d = 0; // raw input dimension
    std::vector<double> c;     // N
    std::vector<double> V;     // N columns of length d+1, column-contiguous
    std::vector<double> alpha; // K
    std::vector<double> omega; // K
    ActivationFamily family;

    int terms() const { return family.size(); }
    double u(std::span<const double> x_tilde) const;
};

/// Which parameter groups follow the flow.
enum class Regime : std::uint8_t {
    knn_all,   // c, v, alpha, omega
    ffn,       // c, v only (the matched feed-forward baseline)
    theorem32, // v, alpha only (omega and c frozen)
};

struct TheoryData {
    int m = 0;
    int d = 0;
    std::vector<double> X; // m rows x~ of length d+1, unit norm
    std::vector<double> y; // m
};

/// x_i uniform on the radius-1/sqrt(2) sphere, augmented with 1/sqrt(2);
/// y_i standard normal (rescale with y_scale).
TheoryData make_theory_data(int m, int d, std::uint64_t seed, double y_scale = 1.0);

/// Assumption-3.1-style init: c_i ~ N(0,1), v_i ~ N(0, I_{d+1}),
/// omega = 1, alpha = [1 0 ... 0].
TwoLayerModel init_two_layer(int N, int d, const ActivationFamily& family, std::uint64_t seed);

std::vector<double> residual(const TwoLayerModel& model, const TheoryData& data);
double loss(const TwoLayerModel& model, const TheoryData& data); // 1/2 |Res|^2

/// The gradient blocks of Appendix A, each entry du(x_j)/d(theta).
struct TheoryMatrices {
    int N = 0, d = 0, K = 0, m = 0;
    std::vector<double> C;     // N x m
    std::vector<double> B;     // (d+1)N x m
    std::vector<double> A;     // K x m
    std::vector<double> Omega; // K x m
    std::vector<double> M;     // ((d+2)N + 2K) x m, stacked [C; B; A; Omega]

    int rows() const { return (d + 2) * N + 2 * K; }
};

/// Throws if any |x~_j| deviates from 1 beyond 1e-12 (theory mode expects
/// normalized augmented inputs).
TheoryMatrices build_matrices(const TwoLayerModel& model, const TheoryData& data);

/// dL/dt along the flow: -|M_active Res|^2 (always <= 0).
double loss_decay_rate(const TheoryMatrices& mats, std::span<const double> res, Regime regime);

/// Psi of the full-rank lemma: Psi_kj = sum_i c_i phi_k(v_i.x~_j), and
/// lambda0 = its m-th largest singular value (Gram + cyclic Jacobi).
/// Pre: m <= K.
struct PsiResult {
    std::vector<double> Psi; // K x m
    double lambda0 = 0.0;
};
PsiResult psi_sigma_min(const TwoLayerModel& model, const TheoryData& data);

/// Flat parameter order [c; v; alpha; omega].
std::vector<double> flatten_theta(const TwoLayerModel& model);
void unflatten_theta(TwoLayerModel& model, std::span<const double> theta);

struct FlowTrajectory {
    double dt = 0.0;
    int halvings = 0;
    bool nonfinite_abort = false;
    std::vector<double> times;
    std::vector<double> losses;      // L(t) at each recorded time
    std::vector<double> theta_drift; // |Theta(t) - Theta(0)| over the active set
};

/// Explicit Euler on Theta' = -grad L. If the loss ever increases, dt is
/// halved and the run restarts from the initial state, up to 20 times.
/// On a non-finite loss the trajectory stops at the last valid state.
/// A positive stop_below ends the run once the loss falls below it.
FlowTrajectory euler_flow(TwoLayerModel& model, const TheoryData& data, Regime regime, double dt,
                          int steps, double stop_below = -1.0);

/// Central-difference probe of dL/dt against -|M Res|^2 at the current
/// state; returns (analytic, numeric) with step h along the flow.
struct DldtProbe {
    double analytic = 0.0;
    double numeric = 0.0;
};
DldtProbe dldt_probe(const TwoLayerModel& model, const TheoryData& data, Regime regime,
                     double h = 1e-6);

struct EarlyDominanceResult {
    FlowTrajectory knn, ffn;
    double loss0_knn = 0.0, loss0_ffn = 0.0;
    double rate_gap_a = 0.0; // |A Res(0)|^2
    int window_steps = 0;    // largest prefix with L_K(dt j) < L_FF(dt j)
    double dt = 0.0;
};

/// Matched-initialization pair run with identical dt (auto-tuned so both
/// trajectories are monotone).
EarlyDominanceResult early_dominance_experiment(int N, int K, int m, int d,
                                                const ActivationFamily& family,
                                                std::uint64_t seed, int steps, double dt0 = 1e-2);

struct ConditionReport {
    double lhs = 0.0, rhs = 0.0;
    bool holds = false;
    double k_sufficient_b1 = 0.0; // (1 + sqrt(1+4 lambda0)) |y|^2 / lambda0
    double rate = 0.0;            // lambda0 / 2, the predicted decay exponent
};
ConditionReport convergence_condition(int K, double lambda0, double y_norm, double B,
                                      double delta);

struct Theorem32Options {
    int N = 3, K = 8, m = 1, d = 2;
    double scale = 200.0; // Rowdy n (so B = n)
    double delta = 0.5;
    double y_fraction = 0.95; // |y| as a fraction of the largest cond:K-feasible value
    int steps = 12000;
    double envelope_decades = 2.0; // window T with e^{-lambda0 T / 2} = 10^-decades
};

struct Theorem32Run {
    double lambda0 = 0.0, y_norm = 0.0, B = 0.0;
    ConditionReport condition;
    FlowTrajectory traj;
    double worst_bound_ratio = 0.0; // max_t L(t) / (L0 e^{-lambda0 t/2})
    bool rate_bound_ok = false;     // worst ratio <= 1.05
    double window_T = 0.0;          // envelope horizon the check covers
    double max_drift = 0.0, sqrt_l0 = 0.0;
    bool drift_ok = false; // |Theta(t)-Theta(0)| <= sqrt(L(0)) throughout
};

/// One seed of the frozen-(omega, c) regime: builds a cond:K-satisfying
/// instance (y scaled to y_fraction of the feasible bound; lambda0 is
/// linear in |y| through c), integrates the flow and checks the
/// L(0) e^{-lambda0 t/2} envelope and the drift bound.
Theorem32Run theorem32_experiment(const Theorem32Options& opts, std::uint64_t seed);

struct AppendixBReport {
    // perturbation lemma
    double psi_shift = 0.0;    // |Psi(t) - Psi(0)| spectral
    double psi_shift_rhs = 0.0;
    bool psi_shift_ok = false;
    // initial misfit lemma, both printed variants
    double sqrt_2l0 = 0.0;
    double misfit_rhs = 0.0;      // |y| (1 + (1+delta) B)
    double misfit_rhs_k = 0.0;    // |y| (1 + (1+delta) B / K)
    bool misfit_ok = false;
    bool misfit_k_ok = false;
    // drift
    double drift = 0.0, sqrt_l0 = 0.0;
    bool drift_ok = false;
};

AppendixBReport appendix_b_bounds(const TwoLayerModel& model_t, const TwoLayerModel& model_0,
                                  const TheoryData& data, double delta);

/// Mapping to the general network type (bias absorbs the 1/sqrt(2)
/// augmentation), used to cross-check gradients between the two paths.
KnnModel to_knn_model(const TwoLayerModel& model);

} // namespace kronnet::theory
