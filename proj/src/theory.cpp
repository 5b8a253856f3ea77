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

#include "kronnet/theory.hpp"

#include "kronnet/linalg.hpp"
#include "kronnet/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace kronnet::theory {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

bool theta_active(Regime r, int idx, int N, int nv, int K) {
    // flat layout: [c (N); v (nv); alpha (K); omega (K)]
    if (idx < N) return r != Regime::theorem32;
    if (idx < N + nv) return true;
    if (idx < N + nv + K) return r != Regime::ffn;
    return r == Regime::knn_all;
}

} // namespace

double TwoLayerModel::u(std::span<const double> x_tilde) const {
    const int K = terms();
    double acc = 0.0;
    double psi[4];
    for (int i = 0; i < N; ++i) {
        const double* vi = V.data() + static_cast<std::size_t>(i) * (d + 1);
        double z = 0.0;
        for (int r = 0; r <= d; ++r) z += vi[r] * x_tilde[static_cast<std::size_t>(r)];
        double a = 0.0;
        for (int k = 0; k < K; ++k) {
            family.slots[static_cast<std::size_t>(k)].eval_scaled(omega[static_cast<std::size_t>(k)], z, 0, psi);
            a += alpha[static_cast<std::size_t>(k)] * psi[0];
        }
        acc += c[static_cast<std::size_t>(i)] * a;
    }
    return acc;
}

TheoryData make_theory_data(int m, int d, std::uint64_t seed, double y_scale) {
    if (m < 1 || d < 1) throw std::invalid_argument("make_theory_data: m, d must be positive");
    Rng rng(seed);
    TheoryData data;
    data.m = m;
    data.d = d;
    data.X.resize(static_cast<std::size_t>(m) * (d + 1));
    data.y.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        // uniform direction scaled to |x| = 1/sqrt(2), then augmented
        double nrm = 0.0;
        std::vector<double> g(static_cast<std::size_t>(d));
        do {
            nrm = 0.0;
            for (double& v : g) {
                v = rng.normal();
                nrm += v * v;
            }
            nrm = std::sqrt(nrm);
        } while (nrm < 1e-12);
        double* row = data.X.data() + static_cast<std::size_t>(j) * (d + 1);
        for (int r = 0; r < d; ++r) row[r] = g[static_cast<std::size_t>(r)] / nrm * kInvSqrt2;
        row[d] = kInvSqrt2;
        data.y[static_cast<std::size_t>(j)] = y_scale * rng.normal();
    }
    return data;
}

TwoLayerModel init_two_layer(int N, int d, const ActivationFamily& family, std::uint64_t seed) {
    TwoLayerModel m;
    m.N = N;
    m.d = d;
    m.family = family;
    const int K = family.size();
    Rng rng(seed);
    m.V.resize(static_cast<std::size_t>(N) * (d + 1));
    for (double& v : m.V) v = rng.normal();
    m.c.resize(static_cast<std::size_t>(N));
    for (double& v : m.c) v = rng.normal();
    m.alpha.assign(static_cast<std::size_t>(K), 0.0);
    m.alpha[0] = 1.0;
    m.omega.assign(static_cast<std::size_t>(K), 1.0);
    return m;
}

std::vector<double> residual(const TwoLayerModel& model, const TheoryData& data) {
    std::vector<double> res(static_cast<std::size_t>(data.m));
    for (int j = 0; j < data.m; ++j) {
        const std::span<const double> xt(data.X.data() + static_cast<std::size_t>(j) * (data.d + 1),
                                         static_cast<std::size_t>(data.d + 1));
        res[static_cast<std::size_t>(j)] = model.u(xt) - data.y[static_cast<std::size_t>(j)];
    }
    return res;
}

double loss(const TwoLayerModel& model, const TheoryData& data) {
    const std::vector<double> res = residual(model, data);
    return 0.5 * la::dot(res, res);
}

TheoryMatrices build_matrices(const TwoLayerModel& model, const TheoryData& data) {
    const int N = model.N, d = model.d, K = model.terms(), m = data.m;
    for (int j = 0; j < m; ++j) {
        double nrm = 0.0;
        for (int r = 0; r <= d; ++r) {
            const double v = data.X[static_cast<std::size_t>(j) * (d + 1) + r];
            nrm += v * v;
        }
        if (std::abs(std::sqrt(nrm) - 1.0) > 1e-12)
            throw std::invalid_argument("build_matrices: inputs must be augmented and normalized");
    }
    TheoryMatrices mats;
    mats.N = N;
    mats.d = d;
    mats.K = K;
    mats.m = m;
    mats.C.assign(static_cast<std::size_t>(N) * m, 0.0);
    mats.B.assign(static_cast<std::size_t>(d + 1) * N * m, 0.0);
    mats.A.assign(static_cast<std::size_t>(K) * m, 0.0);
    mats.Omega.assign(static_cast<std::size_t>(K) * m, 0.0);

    double psi[4];
    for (int j = 0; j < m; ++j) {
        const double* xt = data.X.data() + static_cast<std::size_t>(j) * (d + 1);
        for (int i = 0; i < N; ++i) {
            const double* vi = model.V.data() + static_cast<std::size_t>(i) * (d + 1);
            double z = 0.0;
            for (int r = 0; r <= d; ++r) z += vi[r] * xt[r];
            double sum_a = 0.0;  // sum_k alpha_k phi_k(omega_k z)
            double sum_d = 0.0;  // sum_k alpha_k omega_k phi_k'(omega_k z)
            for (int k = 0; k < K; ++k) {
                const double w = model.omega[static_cast<std::size_t>(k)];
                const double a = model.alpha[static_cast<std::size_t>(k)];
                model.family.slots[static_cast<std::size_t>(k)].eval_scaled(w, z, 1, psi);
                sum_a += a * psi[0];
                sum_d += a * w * psi[1];
                mats.A[static_cast<std::size_t>(k) * m + j] +=
                    model.c[static_cast<std::size_t>(i)] * psi[0];
                mats.Omega[static_cast<std::size_t>(k) * m + j] +=
                    a * model.c[static_cast<std::size_t>(i)] * z * psi[1];
            }
            mats.C[static_cast<std::size_t>(i) * m + j] = sum_a;
            const double ci = model.c[static_cast<std::size_t>(i)];
            for (int r = 0; r <= d; ++r)
                mats.B[(static_cast<std::size_t>(i) * (d + 1) + r) * m + j] = ci * xt[r] * sum_d;
        }
    }
    mats.M.reserve(static_cast<std::size_t>(mats.rows()) * m);
    mats.M.insert(mats.M.end(), mats.C.begin(), mats.C.end());
    mats.M.insert(mats.M.end(), mats.B.begin(), mats.B.end());
    mats.M.insert(mats.M.end(), mats.A.begin(), mats.A.end());
    mats.M.insert(mats.M.end(), mats.Omega.begin(), mats.Omega.end());
    return mats;
}

double loss_decay_rate(const TheoryMatrices& mats, std::span<const double> res, Regime regime) {
    if (static_cast<int>(res.size()) != mats.m)
        throw std::invalid_argument("loss_decay_rate: residual length mismatch");
    const int nv = (mats.d + 1) * mats.N;
    double acc = 0.0;
    std::vector<double> row_dot(1);
    for (int r = 0; r < mats.rows(); ++r) {
        if (!theta_active(regime, r, mats.N, nv, mats.K)) continue;
        double s = 0.0;
        const double* row = mats.M.data() + static_cast<std::size_t>(r) * mats.m;
        for (int j = 0; j < mats.m; ++j) s += row[j] * res[static_cast<std::size_t>(j)];
        acc += s * s;
    }
    return -acc;
}

PsiResult psi_sigma_min(const TwoLayerModel& model, const TheoryData& data) {
    const int K = model.terms(), m = data.m, d = model.d, N = model.N;
    if (m > K)
        throw std::invalid_argument("psi_sigma_min: requires m <= K (K >= m assumption)");
    PsiResult out;
    out.Psi.assign(static_cast<std::size_t>(K) * m, 0.0);
    double psi[4];
    for (int j = 0; j < m; ++j) {
        const double* xt = data.X.data() + static_cast<std::size_t>(j) * (d + 1);
        for (int i = 0; i < N; ++i) {
            const double* vi = model.V.data() + static_cast<std::size_t>(i) * (d + 1);
            double z = 0.0;
            for (int r = 0; r <= d; ++r) z += vi[r] * xt[r];
            for (int k = 0; k < K; ++k) {
                model.family.slots[static_cast<std::size_t>(k)].eval(z, 0, psi);
                out.Psi[static_cast<std::size_t>(k) * m + j] +=
                    model.c[static_cast<std::size_t>(i)] * psi[0];
            }
        }
    }
    out.lambda0 = la::singular_values(out.Psi, K, m).back();
    return out;
}

std::vector<double> flatten_theta(const TwoLayerModel& model) {
    std::vector<double> theta;
    theta.reserve(model.c.size() + model.V.size() + model.alpha.size() + model.omega.size());
    theta.insert(theta.end(), model.c.begin(), model.c.end());
    theta.insert(theta.end(), model.V.begin(), model.V.end());
    theta.insert(theta.end(), model.alpha.begin(), model.alpha.end());
    theta.insert(theta.end(), model.omega.begin(), model.omega.end());
    return theta;
}

void unflatten_theta(TwoLayerModel& model, std::span<const double> theta) {
    std::size_t p = 0;
    for (double& v : model.c) v = theta[p++];
    for (double& v : model.V) v = theta[p++];
    for (double& v : model.alpha) v = theta[p++];
    for (double& v : model.omega) v = theta[p++];
}

namespace {

// one gradient: M_active * Res
std::vector<double> flow_gradient(const TwoLayerModel& model, const TheoryData& data,
                                  Regime regime, std::vector<double>& res_out) {
    const TheoryMatrices mats = build_matrices(model, data);
    res_out = residual(model, data);
    const int nv = (mats.d + 1) * mats.N;
    std::vector<double> grad(static_cast<std::size_t>(mats.rows()), 0.0);
    for (int r = 0; r < mats.rows(); ++r) {
        if (!theta_active(regime, r, mats.N, nv, mats.K)) continue;
        double s = 0.0;
        const double* row = mats.M.data() + static_cast<std::size_t>(r) * mats.m;
        for (int j = 0; j < mats.m; ++j) s += row[j] * res_out[static_cast<std::size_t>(j)];
        grad[static_cast<std::size_t>(r)] = s;
    }
    return grad;
}

FlowTrajectory run_flow_fixed_dt(TwoLayerModel& model, const TheoryData& data, Regime regime,
                                 double dt, int steps, bool& monotone, double stop_below = -1.0) {
    FlowTrajectory traj;
    traj.dt = dt;
    const std::vector<double> theta0 = flatten_theta(model);
    std::vector<double> theta = theta0;
    std::vector<double> res;
    monotone = true;
    double prev_loss = loss(model, data);
    traj.times.push_back(0.0);
    traj.losses.push_back(prev_loss);
    traj.theta_drift.push_back(0.0);
    for (int s = 1; s <= steps; ++s) {
        const std::vector<double> grad = flow_gradient(model, data, regime, res);
        for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= dt * grad[i];
        unflatten_theta(model, theta);
        const double L = loss(model, data);
        if (!std::isfinite(L)) {
            // roll back to the last valid state and stop
            for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += dt * grad[i];
            unflatten_theta(model, theta);
            traj.nonfinite_abort = true;
            break;
        }
        if (L > prev_loss) monotone = false;
        prev_loss = L;
        traj.times.push_back(dt * s);
        traj.losses.push_back(L);
        double drift = 0.0;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double dd = theta[i] - theta0[i];
            drift += dd * dd;
        }
        traj.theta_drift.push_back(std::sqrt(drift));
        if (stop_below > 0.0 && L <= stop_below) break;
    }
    return traj;
}

} // namespace

FlowTrajectory euler_flow(TwoLayerModel& model, const TheoryData& data, Regime regime, double dt,
                          int steps, double stop_below) {
    if (dt <= 0.0) throw std::invalid_argument("euler_flow: dt must be positive");
    const std::vector<double> theta0 = flatten_theta(model);
    for (int attempt = 0; attempt <= 20; ++attempt) {
        unflatten_theta(model, theta0);
        bool monotone = true;
        FlowTrajectory traj = run_flow_fixed_dt(model, data, regime, dt, steps, monotone, stop_below);
        traj.halvings = attempt;
        if (monotone && !traj.nonfinite_abort) return traj;
        if (attempt == 20) return traj;
        dt *= 0.5;
    }
    return {};
}

DldtProbe dldt_probe(const TwoLayerModel& model, const TheoryData& data, Regime regime, double h) {
    DldtProbe probe;
    std::vector<double> res;
    const std::vector<double> grad = flow_gradient(model, data, regime, res);
    const TheoryMatrices mats = build_matrices(model, data);
    probe.analytic = loss_decay_rate(mats, res, regime);
    const std::vector<double> theta = flatten_theta(model);
    TwoLayerModel probe_model = model;
    std::vector<double> shifted = theta;
    for (std::size_t i = 0; i < theta.size(); ++i) shifted[i] = theta[i] - h * grad[i];
    unflatten_theta(probe_model, shifted);
    const double up = loss(probe_model, data);
    for (std::size_t i = 0; i < theta.size(); ++i) shifted[i] = theta[i] + h * grad[i];
    unflatten_theta(probe_model, shifted);
    const double dn = loss(probe_model, data);
    probe.numeric = (up - dn) / (2.0 * h);
    return probe;
}

EarlyDominanceResult early_dominance_experiment(int N, int K, int m, int d,
                                                const ActivationFamily& family,
                                                std::uint64_t seed, int steps, double dt0) {
    if (!family.all_c1())
        throw std::invalid_argument("early_dominance: family must be C1 (no relu slots)");
    if (m > K) throw std::invalid_argument("early_dominance: requires m <= K");
    EarlyDominanceResult out;
    const TheoryData data = make_theory_data(m, d, seed ^ 0x9e3779b97f4a7c15ull);
    const TwoLayerModel model0 = init_two_layer(N, d, family, seed);

    out.loss0_knn = loss(model0, data);
    out.loss0_ffn = out.loss0_knn; // identical parameters, identical loss

    {
        const TheoryMatrices mats = build_matrices(model0, data);
        const std::vector<double> res = residual(model0, data);
        double acc = 0.0;
        for (int k = 0; k < mats.K; ++k) {
            double s = 0.0;
            for (int j = 0; j < m; ++j)
                s += mats.A[static_cast<std::size_t>(k) * m + j] * res[static_cast<std::size_t>(j)];
            acc += s * s;
        }
        out.rate_gap_a = acc;
    }

    double dt = dt0;
    for (int attempt = 0; attempt <= 20; ++attempt) {
        TwoLayerModel mk = model0;
        TwoLayerModel mf = model0;
        bool mono_k = true, mono_f = true;
        FlowTrajectory tk = run_flow_fixed_dt(mk, data, Regime::knn_all, dt, steps, mono_k);
        FlowTrajectory tf = run_flow_fixed_dt(mf, data, Regime::ffn, dt, steps, mono_f);
        if ((mono_k && mono_f && !tk.nonfinite_abort && !tf.nonfinite_abort) || attempt == 20) {
            out.knn = std::move(tk);
            out.ffn = std::move(tf);
            out.dt = dt;
            break;
        }
        dt *= 0.5;
    }

    int prefix = 0;
    const std::size_t upto = std::min(out.knn.losses.size(), out.ffn.losses.size());
    for (std::size_t j = 1; j < upto; ++j) {
        if (out.knn.losses[j] < out.ffn.losses[j])
            prefix = static_cast<int>(j);
        else
            break;
    }
    out.window_steps = prefix;
    return out;
}

ConditionReport convergence_condition(int K, double lambda0, double y_norm, double B,
                                      double delta) {
    if (K < 1 || lambda0 <= 0.0 || y_norm <= 0.0 || B <= 0.0 || delta <= 0.0 || delta >= 1.0)
        throw std::invalid_argument("convergence_condition: inputs must be positive, delta in (0,1)");
    ConditionReport rep;
    rep.lhs = (lambda0 * std::sqrt(double(K)) - 2.0 * y_norm * y_norm * B) * K;
    rep.rhs = 2.0 * (1.0 + delta) * y_norm * y_norm * B * B;
    rep.holds = rep.lhs >= rep.rhs;
    rep.k_sufficient_b1 = (1.0 + std::sqrt(1.0 + 4.0 * lambda0)) * y_norm * y_norm / lambda0;
    rep.rate = 0.5 * lambda0;
    return rep;
}

namespace {

TwoLayerModel theorem32_model(int N, int d, const ActivationFamily& family, double y_norm, int m,
                              std::uint64_t seed) {
    const int K = family.size();
    TwoLayerModel model;
    model.N = N;
    model.d = d;
    model.family = family;
    Rng rng(seed);
    model.V.resize(static_cast<std::size_t>(N) * (d + 1));
    for (double& v : model.V) v = rng.normal();
    model.c.resize(static_cast<std::size_t>(N));
    const double c0 = y_norm / (static_cast<double>(K) * N * std::sqrt(double(m)));
    for (double& v : model.c) v = c0 * rng.rademacher();
    // K |alpha|_inf <= 1 and zero mean under N(0,1) for odd slots
    model.alpha.assign(static_cast<std::size_t>(K), 1.0 / K);
    model.omega.assign(static_cast<std::size_t>(K), 1.0);
    return model;
}

} // namespace

Theorem32Run theorem32_experiment(const Theorem32Options& opts, std::uint64_t seed) {
    SchemeSpec spec = parse_scheme("rowdy" + std::to_string(opts.K));
    spec.base = Act::tanh;
    spec.scale = opts.scale;
    const ActivationFamily family = make_special_case(spec).family;
    for (const Slot& s : family.slots) {
        if (!(s.base == Act::tanh || s.base == Act::sin))
            throw std::invalid_argument("theorem32_experiment: needs odd bounded slots");
    }

    Theorem32Run run;
    run.B = family.bound();

    TheoryData data = make_theory_data(opts.m, opts.d, seed ^ 0xabcdef1234567ull);
    // lambda0 scales linearly with |y| (c is proportional to |y|), so pick
    // |y| at a fixed fraction of the largest value satisfying cond:K.
    const TwoLayerModel unit_model =
        theorem32_model(opts.N, opts.d, family, 1.0, opts.m, seed);
    const double lambda0_unit = psi_sigma_min(unit_model, data).lambda0;
    const double K = opts.K, B = run.B;
    const double y_max =
        lambda0_unit * std::pow(K, 1.5) / (2.0 * B * (K + (1.0 + opts.delta) * B));
    const double y_norm = opts.y_fraction * y_max;
    double cur = la::norm2(data.y);
    if (cur < 1e-15) cur = 1.0;
    for (double& v : data.y) v *= y_norm / cur;
    run.y_norm = y_norm;

    TwoLayerModel model = theorem32_model(opts.N, opts.d, family, y_norm, opts.m, seed);
    run.lambda0 = psi_sigma_min(model, data).lambda0;
    run.condition = convergence_condition(opts.K, run.lambda0, y_norm, B, opts.delta);

    const double L0 = loss(model, data);
    run.sqrt_l0 = std::sqrt(L0);
    const double T = 2.0 * opts.envelope_decades * std::log(10.0) / run.lambda0;
    run.window_T = T;
    // dt must resolve the fast decay timescale, not just the envelope
    // horizon, or a single Euler leap inflates the parameter path length.
    std::vector<double> res0;
    const std::vector<double> g0 = flow_gradient(model, data, Regime::theorem32, res0);
    const double rate0 = la::dot(g0, g0) / std::max(la::dot(res0, res0), 1e-300) * 2.0;
    double dt = T / opts.steps;
    if (rate0 > 0.0) dt = std::min(dt, 0.05 / rate0);
    const double floor = 1e-28 * std::max(L0, 1e-300);
    run.traj = euler_flow(model, data, Regime::theorem32, dt, opts.steps, floor);

    run.worst_bound_ratio = 0.0;
    run.max_drift = 0.0;
    for (std::size_t i = 0; i < run.traj.times.size(); ++i) {
        const double envelope = L0 * std::exp(-0.5 * run.lambda0 * run.traj.times[i]);
        if (envelope > 0.0)
            run.worst_bound_ratio = std::max(run.worst_bound_ratio, run.traj.losses[i] / envelope);
        run.max_drift = std::max(run.max_drift, run.traj.theta_drift[i]);
    }
    // past an early stop the loss is non-increasing while the envelope
    // keeps shrinking: the endpoint dominates the remaining window
    if (!run.traj.times.empty() && run.traj.times.back() < T) {
        const double envelope_T = L0 * std::exp(-0.5 * run.lambda0 * T);
        if (envelope_T > 0.0)
            run.worst_bound_ratio =
                std::max(run.worst_bound_ratio, run.traj.losses.back() / envelope_T);
    }
    run.rate_bound_ok = run.worst_bound_ratio <= 1.05;
    run.drift_ok = run.max_drift <= run.sqrt_l0;
    return run;
}

AppendixBReport appendix_b_bounds(const TwoLayerModel& model_t, const TwoLayerModel& model_0,
                                  const TheoryData& data, double delta) {
    if (model_t.N != model_0.N || model_t.d != model_0.d ||
        model_t.terms() != model_0.terms())
        throw std::invalid_argument("appendix_b_bounds: model shape mismatch");
    AppendixBReport rep;
    const int K = model_0.terms(), m = data.m;
    const double B = model_0.family.bound();

    const PsiResult psi_t = psi_sigma_min(model_t, data);
    const PsiResult psi_0 = psi_sigma_min(model_0, data);
    std::vector<double> diff(psi_t.Psi.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = psi_t.Psi[i] - psi_0.Psi[i];
    rep.psi_shift = la::spectral_norm(diff, K, m);

    // drift over the trained set {alpha, v}
    double drift = 0.0;
    for (std::size_t i = 0; i < model_0.V.size(); ++i) {
        const double dd = model_t.V[i] - model_0.V[i];
        drift += dd * dd;
    }
    for (std::size_t i = 0; i < model_0.alpha.size(); ++i) {
        const double dd = model_t.alpha[i] - model_0.alpha[i];
        drift += dd * dd;
    }
    drift = std::sqrt(drift);
    rep.drift = drift;

    double alpha0_inf = 0.0;
    for (double a : model_0.alpha) alpha0_inf = std::max(alpha0_inf, std::abs(a));
    double xmax = 0.0;
    for (int j = 0; j < m; ++j) {
        double nrm = 0.0;
        for (int r = 0; r <= data.d; ++r) {
            const double v = data.X[static_cast<std::size_t>(j) * (data.d + 1) + r];
            nrm += v * v;
        }
        xmax = std::max(xmax, std::sqrt(nrm));
    }
    rep.psi_shift_rhs = std::sqrt(1.0 + (xmax * alpha0_inf) * (xmax * alpha0_inf)) *
                        la::norm1(model_0.c) * B * std::sqrt(double(K) * m) * drift;
    rep.psi_shift_ok = rep.psi_shift <= rep.psi_shift_rhs + 1e-12;

    const double L0 = loss(model_0, data);
    rep.sqrt_2l0 = std::sqrt(2.0 * L0);
    const double y_norm = la::norm2(data.y);
    rep.misfit_rhs = y_norm * (1.0 + (1.0 + delta) * B);
    rep.misfit_rhs_k = y_norm * (1.0 + (1.0 + delta) * B / K);
    rep.misfit_ok = rep.sqrt_2l0 <= rep.misfit_rhs;
    rep.misfit_k_ok = rep.sqrt_2l0 <= rep.misfit_rhs_k;

    rep.sqrt_l0 = std::sqrt(L0);
    rep.drift_ok = drift <= rep.sqrt_l0;
    return rep;
}

KnnModel to_knn_model(const TwoLayerModel& model) {
    KnnModel m;
    m.family = model.family;
    m.scheme = SchemeSpec{};
    KnnLayer hidden;
    hidden.in = model.d;
    hidden.out = model.N;
    hidden.W.resize(static_cast<std::size_t>(model.N) * model.d);
    hidden.b.resize(static_cast<std::size_t>(model.N));
    for (int i = 0; i < model.N; ++i) {
        const double* vi = model.V.data() + static_cast<std::size_t>(i) * (model.d + 1);
        for (int r = 0; r < model.d; ++r)
            hidden.W[static_cast<std::size_t>(i) * model.d + r] = vi[r];
        hidden.b[static_cast<std::size_t>(i)] = vi[model.d] * kInvSqrt2;
    }
    hidden.adaptive.alpha = model.alpha;
    hidden.adaptive.omega = model.omega;
    hidden.adaptive.alpha_trainable.assign(model.alpha.size(), 1);
    hidden.adaptive.omega_trainable.assign(model.omega.size(), 1);
    KnnLayer out;
    out.in = model.N;
    out.out = 1;
    out.W = model.c;
    out.b = {0.0};
    m.layers.push_back(std::move(hidden));
    m.layers.push_back(std::move(out));
    return m;
}

} // namespace kronnet::theory
