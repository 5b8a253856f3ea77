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

#include "kronnet/kernels.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kronnet::kern {

namespace {

double bce_terms(double u, double y, double& dldu) {
    // (1-y) u + softplus(-u), stable on both tails
    const double sp = (u < 0.0 ? -u : 0.0) + std::log1p(std::exp(-std::abs(u)));
    const double sig = 1.0 / (1.0 + std::exp(-u));
    dldu = sig - y;
    return (1.0 - y) * u + sp;
}

// ---- first-order per-sample state ----

struct Scratch1 {
    std::vector<std::vector<double>> a; // input to each layer
    std::vector<std::vector<double>> s; // pre-activations
    std::vector<std::vector<double>> p0, p1; // per hidden layer, out*K
    std::vector<double> gs, gz;

    explicit Scratch1(const KnnModel& m) {
        const int D = m.depth();
        const int K = m.terms();
        int maxw = m.input_dim();
        a.resize(static_cast<std::size_t>(D));
        s.resize(static_cast<std::size_t>(D));
        p0.resize(static_cast<std::size_t>(D));
        p1.resize(static_cast<std::size_t>(D));
        for (int l = 0; l < D; ++l) {
            const KnnLayer& L = m.layers[static_cast<std::size_t>(l)];
            a[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(L.in));
            s[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(L.out));
            if (l < D - 1) {
                p0[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(L.out) * K);
                p1[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(L.out) * K);
            }
            maxw = std::max(maxw, L.out);
        }
        gs.resize(static_cast<std::size_t>(maxw));
        gz.resize(static_cast<std::size_t>(maxw));
    }
};

void forward_sample_1(const KnnModel& m, const double* x, Scratch1& sc) {
    const int D = m.depth();
    const int K = m.terms();
    std::memcpy(sc.a[0].data(), x, sizeof(double) * sc.a[0].size());
    double psi[4];
    for (int l = 0; l < D; ++l) {
        const KnnLayer& L = m.layers[static_cast<std::size_t>(l)];
        const double* in = sc.a[static_cast<std::size_t>(l)].data();
        double* out = sc.s[static_cast<std::size_t>(l)].data();
        for (int i = 0; i < L.out; ++i) {
            const double* row = L.W.data() + static_cast<std::size_t>(i) * L.in;
            double acc = L.b[static_cast<std::size_t>(i)];
            for (int j = 0; j < L.in; ++j) acc += row[j] * in[j];
            out[i] = acc;
        }
        if (l < D - 1) {
            const AdaptiveParams& ap = L.adaptive;
            double* nz = sc.a[static_cast<std::size_t>(l) + 1].data();
            double* tp0 = sc.p0[static_cast<std::size_t>(l)].data();
            double* tp1 = sc.p1[static_cast<std::size_t>(l)].data();
            for (int i = 0; i < L.out; ++i) {
                const double sv = out[i];
                double acc = 0.0;
                for (int k = 0; k < K; ++k) {
                    m.family.slots[static_cast<std::size_t>(k)].eval_scaled(ap.omega[static_cast<std::size_t>(k)], sv, 1, psi);
                    tp0[i * K + k] = psi[0];
                    tp1[i * K + k] = psi[1];
                    acc += ap.alpha[static_cast<std::size_t>(k)] * psi[0];
                }
                nz[i] = acc;
            }
        }
    }
}

// gu: d loss / d u, length out_dim; grad accumulated into flat layout.
void backward_sample_1(const KnnModel& m, const FlatLayout& fl, Scratch1& sc, const double* gu,
                       double* grad) {
    const int D = m.depth();
    const int K = m.terms();
    double* gs = sc.gs.data();
    double* gz = sc.gz.data();
    std::memcpy(gs, gu, sizeof(double) * static_cast<std::size_t>(m.output_dim()));
    for (int l = D - 1; l >= 0; --l) {
        const KnnLayer& L = m.layers[static_cast<std::size_t>(l)];
        const double* in = sc.a[static_cast<std::size_t>(l)].data();
        double* gW = grad + fl.w_off[static_cast<std::size_t>(l)];
        double* gb = grad + fl.b_off[static_cast<std::size_t>(l)];
        for (int i = 0; i < L.out; ++i) {
            const double g = gs[i];
            if (g != 0.0) {
                double* grow = gW + static_cast<std::size_t>(i) * L.in;
                for (int j = 0; j < L.in; ++j) grow[j] += g * in[j];
            }
            gb[i] += g;
        }
        if (l == 0) break;
        // adjoint of the previous activation output
        for (int j = 0; j < L.in; ++j) gz[j] = 0.0;
        for (int i = 0; i < L.out; ++i) {
            const double g = gs[i];
            if (g == 0.0) continue;
            const double* row = L.W.data() + static_cast<std::size_t>(i) * L.in;
            for (int j = 0; j < L.in; ++j) gz[j] += row[j] * g;
        }
        const int h = l - 1;
        const KnnLayer& H = m.layers[static_cast<std::size_t>(h)];
        const AdaptiveParams& ap = H.adaptive;
        const double* sv = sc.s[static_cast<std::size_t>(h)].data();
        const double* tp0 = sc.p0[static_cast<std::size_t>(h)].data();
        const double* tp1 = sc.p1[static_cast<std::size_t>(h)].data();
        double* ga = grad + fl.a_off[static_cast<std::size_t>(h)];
        double* go = grad + fl.o_off[static_cast<std::size_t>(h)];
        for (int i = 0; i < H.out; ++i) {
            const double g = gz[i];
            double chain = 0.0;
            for (int k = 0; k < K; ++k) {
                const double a = ap.alpha[static_cast<std::size_t>(k)];
                const double w = ap.omega[static_cast<std::size_t>(k)];
                const double q0 = tp0[i * K + k];
                const double q1 = tp1[i * K + k];
                ga[k] += g * q0;
                go[k] += g * a * sv[i] * q1;
                chain += a * w * q1;
            }
            gs[i] = g * chain;
        }
    }
}

// ---- order-2 jet per-sample state (5 streams: v, x1, x2, y1, y2) ----

struct Scratch2 {
    // a[l][t]: stream t of the input to layer l; s[l][t]: pre-activations
    std::vector<std::array<std::vector<double>, 5>> a, s;
    std::vector<std::vector<double>> p; // hidden layers: out*K*4
    std::array<std::vector<double>, 5> bs, ba;

    explicit Scratch2(const KnnModel& m) {
        const int D = m.depth();
        const int K = m.terms();
        int maxw = m.input_dim();
        a.resize(static_cast<std::size_t>(D));
        s.resize(static_cast<std::size_t>(D));
        p.resize(static_cast<std::size_t>(D));
        for (int l = 0; l < D; ++l) {
            const KnnLayer& L = m.layers[static_cast<std::size_t>(l)];
            for (int t = 0; t < 5; ++t) {
                a[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)].resize(
                    static_cast<std::size_t>(L.in));
                s[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)].resize(
                    static_cast<std::size_t>(L.out));
            }
            if (l < D - 1)
                p[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(L.out) * K * 4);
            maxw = std::max(maxw, L.out);
        }
        for (int t = 0; t < 5; ++t) {
            bs[static_cast<std::size_t>(t)].resize(static_cast<std::size_t>(maxw));
            ba[static_cast<std::size_t>(t)].resize(static_cast<std::size_t>(maxw));
        }
    }
};

// returns (u, u_xx + u_yy) via out params
void forward_sample_2(const KnnModel& m, double x, double y, Scratch2& sc, double& u,
                      double& lap) {
    const int D = m.depth();
    const int K = m.terms();
    sc.a[0][0][0] = x;
    sc.a[0][0][1] = y;
    sc.a[0][1][0] = 1.0;
    sc.a[0][1][1] = 0.0;
    sc.a[0][2][0] = 0.0;
    sc.a[0][2][1] = 0.0;
    sc.a[0][3][0] = 0.0;
    sc.a[0][3][1] = 1.0;
    sc.a[0][4][0] = 0.0;
    sc.a[0][4][1] = 0.0;
    double psi[4];
    for (int l = 0; l < D; ++l) {
        const KnnLayer& L = m.layers[static_cast<std::size_t>(l)];
        for (int t = 0; t < 5; ++t) {
            const double* in = sc.a[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)].data();
            double* out = sc.s[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)].data();
            for (int i = 0; i < L.out; ++i) {
                const double* row = L.W.data() + static_cast<std::size_t>(i) * L.in;
                double acc = t == 0 ? L.b[static_cast<std::size_t>(i)] : 0.0;
                for (int j = 0; j < L.in; ++j) acc += row[j] * in[j];
                out[i] = acc;
            }
        }
        if (l < D - 1) {
            const AdaptiveParams& ap = L.adaptive;
            auto& sl = sc.s[static_cast<std::size_t>(l)];
            auto& nz = sc.a[static_cast<std::size_t>(l) + 1];
            double* tp = sc.p[static_cast<std::size_t>(l)].data();
            for (int i = 0; i < L.out; ++i) {
                const double sv = sl[0][static_cast<std::size_t>(i)];
                double A0 = 0.0, A1 = 0.0, A2 = 0.0;
                double* pi = tp + static_cast<std::size_t>(i) * K * 4;
                for (int k = 0; k < K; ++k) {
                    const double a = ap.alpha[static_cast<std::size_t>(k)];
                    const double w = ap.omega[static_cast<std::size_t>(k)];
                    m.family.slots[static_cast<std::size_t>(k)].eval_scaled(w, sv, 3, psi);
                    pi[k * 4 + 0] = psi[0];
                    pi[k * 4 + 1] = psi[1];
                    pi[k * 4 + 2] = psi[2];
                    pi[k * 4 + 3] = psi[3];
                    A0 += a * psi[0];
                    A1 += a * w * psi[1];
                    A2 += a * w * w * psi[2];
                }
                const double sx1 = sl[1][static_cast<std::size_t>(i)];
                const double sx2 = sl[2][static_cast<std::size_t>(i)];
                const double sy1 = sl[3][static_cast<std::size_t>(i)];
                const double sy2 = sl[4][static_cast<std::size_t>(i)];
                nz[0][static_cast<std::size_t>(i)] = A0;
                nz[1][static_cast<std::size_t>(i)] = A1 * sx1;
                nz[2][static_cast<std::size_t>(i)] = A2 * sx1 * sx1 + A1 * sx2;
                nz[3][static_cast<std::size_t>(i)] = A1 * sy1;
                nz[4][static_cast<std::size_t>(i)] = A2 * sy1 * sy1 + A1 * sy2;
            }
        }
    }
    u = sc.s[static_cast<std::size_t>(D - 1)][0][0];
    lap = sc.s[static_cast<std::size_t>(D - 1)][2][0] + sc.s[static_cast<std::size_t>(D - 1)][4][0];
}

// Seeds are the adjoints of (u, u_xx, u_yy) of the scalar output.
void backward_sample_2(const KnnModel& m, const FlatLayout& fl, Scratch2& sc, double seed_u,
                       double seed_lap, double* grad) {
    const int D = m.depth();
    const int K = m.terms();
    auto& bs = sc.bs;
    auto& ba = sc.ba;
    bs[0][0] = seed_u;
    bs[1][0] = 0.0;
    bs[2][0] = seed_lap;
    bs[3][0] = 0.0;
    bs[4][0] = seed_lap;
    for (int l = D - 1; l >= 0; --l) {
        const KnnLayer& L = m.layers[static_cast<std::size_t>(l)];
        double* gW = grad + fl.w_off[static_cast<std::size_t>(l)];
        double* gb = grad + fl.b_off[static_cast<std::size_t>(l)];
        for (int t = 0; t < 5; ++t) {
            const double* in = sc.a[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)].data();
            const double* g = bs[static_cast<std::size_t>(t)].data();
            for (int i = 0; i < L.out; ++i) {
                const double gi = g[i];
                if (gi == 0.0) continue;
                double* grow = gW + static_cast<std::size_t>(i) * L.in;
                for (int j = 0; j < L.in; ++j) grow[j] += gi * in[j];
            }
        }
        for (int i = 0; i < L.out; ++i) gb[i] += bs[0][static_cast<std::size_t>(i)];
        if (l == 0) break;
        for (int t = 0; t < 5; ++t) {
            double* gz = ba[static_cast<std::size_t>(t)].data();
            const double* g = bs[static_cast<std::size_t>(t)].data();
            for (int j = 0; j < L.in; ++j) gz[j] = 0.0;
            for (int i = 0; i < L.out; ++i) {
                const double gi = g[i];
                if (gi == 0.0) continue;
                const double* row = L.W.data() + static_cast<std::size_t>(i) * L.in;
                for (int j = 0; j < L.in; ++j) gz[j] += row[j] * gi;
            }
        }
        const int h = l - 1;
        const KnnLayer& H = m.layers[static_cast<std::size_t>(h)];
        const AdaptiveParams& ap = H.adaptive;
        auto& sh = sc.s[static_cast<std::size_t>(h)];
        const double* tp = sc.p[static_cast<std::size_t>(h)].data();
        double* ga = grad + fl.a_off[static_cast<std::size_t>(h)];
        double* go = grad + fl.o_off[static_cast<std::size_t>(h)];
        for (int i = 0; i < H.out; ++i) {
            const double bv = ba[0][static_cast<std::size_t>(i)];
            const double bx1 = ba[1][static_cast<std::size_t>(i)];
            const double bx2 = ba[2][static_cast<std::size_t>(i)];
            const double by1 = ba[3][static_cast<std::size_t>(i)];
            const double by2 = ba[4][static_cast<std::size_t>(i)];
            const double sv = sh[0][static_cast<std::size_t>(i)];
            const double sx1 = sh[1][static_cast<std::size_t>(i)];
            const double sx2 = sh[2][static_cast<std::size_t>(i)];
            const double sy1 = sh[3][static_cast<std::size_t>(i)];
            const double sy2 = sh[4][static_cast<std::size_t>(i)];
            const double* pi = tp + static_cast<std::size_t>(i) * K * 4;
            double A1 = 0.0, A2 = 0.0, A3 = 0.0;
            for (int k = 0; k < K; ++k) {
                const double a = ap.alpha[static_cast<std::size_t>(k)];
                const double w = ap.omega[static_cast<std::size_t>(k)];
                const double q0 = pi[k * 4 + 0];
                const double q1 = pi[k * 4 + 1];
                const double q2 = pi[k * 4 + 2];
                const double q3 = pi[k * 4 + 3];
                A1 += a * w * q1;
                A2 += a * w * w * q2;
                A3 += a * w * w * w * q3;
                // d streams / d alpha_k
                ga[k] += bv * q0 + bx1 * (w * q1 * sx1) + bx2 * (w * w * q2 * sx1 * sx1 + w * q1 * sx2) +
                         by1 * (w * q1 * sy1) + by2 * (w * w * q2 * sy1 * sy1 + w * q1 * sy2);
                // d streams / d omega_k
                const double dA1 = a * (q1 + w * sv * q2);
                const double dA2 = a * (2.0 * w * q2 + w * w * sv * q3);
                go[k] += bv * (a * sv * q1) + bx1 * dA1 * sx1 + bx2 * (dA2 * sx1 * sx1 + dA1 * sx2) +
                         by1 * dA1 * sy1 + by2 * (dA2 * sy1 * sy1 + dA1 * sy2);
            }
            bs[0][static_cast<std::size_t>(i)] =
                bv * A1 + bx1 * A2 * sx1 + bx2 * (A3 * sx1 * sx1 + A2 * sx2) + by1 * A2 * sy1 +
                by2 * (A3 * sy1 * sy1 + A2 * sy2);
            bs[1][static_cast<std::size_t>(i)] = bx1 * A1 + bx2 * 2.0 * A2 * sx1;
            bs[2][static_cast<std::size_t>(i)] = bx2 * A1;
            bs[3][static_cast<std::size_t>(i)] = by1 * A1 + by2 * 2.0 * A2 * sy1;
            bs[4][static_cast<std::size_t>(i)] = by2 * A1;
        }
    }
}

double sample_loss_seed(LossKind kind, const KnnModel& m, const double* u, const double* y,
                        std::size_t n, double* gu) {
    const int dout = m.output_dim();
    switch (kind) {
    case LossKind::square_sum: {
        double l = 0.0;
        for (int o = 0; o < dout; ++o) {
            const double r = u[o] - y[o];
            gu[o] = r;
            l += 0.5 * r * r;
        }
        return l;
    }
    case LossKind::bce_mean: {
        double d = 0.0;
        const double l = bce_terms(u[0], y[0], d);
        gu[0] = d / static_cast<double>(n);
        return l / static_cast<double>(n);
    }
    case LossKind::mean_sq: {
        gu[0] = 2.0 * u[0] / static_cast<double>(n);
        return u[0] * u[0] / static_cast<double>(n);
    }
    }
    return 0.0;
}

// ---- tape reference backends ----

double loss_grad_first_order_tape(const KnnModel& model, std::span<const double> X,
                                  std::span<const double> Y, std::size_t n, LossKind kind,
                                  std::span<double> grad) {
    const FlatParams fp = flatten(model);
    const int din = model.input_dim();
    const int dout = model.output_dim();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ad::Tape tape;
        TapeModel tm = bind_model(tape, model);
        auto u = forward_tape(tm, X.subspan(i * static_cast<std::size_t>(din),
                                            static_cast<std::size_t>(din)));
        ad::Var loss = tape.constant(0.0);
        switch (kind) {
        case LossKind::square_sum:
            for (int o = 0; o < dout; ++o) {
                ad::Var r = u[static_cast<std::size_t>(o)] -
                            Y[i * static_cast<std::size_t>(dout) + static_cast<std::size_t>(o)];
                loss = loss + 0.5 * (r * r);
            }
            break;
        case LossKind::bce_mean: {
            const double y = Y[i];
            loss = ((1.0 - y) * u[0] + ad::softplus(-u[0])) * (1.0 / static_cast<double>(n));
            break;
        }
        case LossKind::mean_sq:
            loss = (u[0] * u[0]) * (1.0 / static_cast<double>(n));
            break;
        }
        tape.eval(fp.theta);
        total += tape.value(loss);
        const std::vector<double> g = tape.backward(loss);
        for (std::size_t p = 0; p < g.size(); ++p) grad[p] += g[p];
    }
    return total;
}

double loss_grad_helmholtz_tape(const KnnModel& model, std::span<const double> Xres,
                                std::span<const double> f_vals, std::size_t n_res, double k2,
                                std::span<const double> Xbnd, std::size_t n_bnd, double w_r,
                                double w_b, std::span<double> grad) {
    const FlatParams fp = flatten(model);
    double total = 0.0;
    for (std::size_t i = 0; i < n_res; ++i) {
        ad::Tape tape;
        TapeModel tm = bind_model(tape, model);
        const double xy[2] = {Xres[2 * i], Xres[2 * i + 1]};
        auto jx = jet_forward(tm, xy, 0);
        auto jy = jet_forward(tm, xy, 1);
        ad::Var r = jx[0].d2 + jy[0].d2 + k2 * jx[0].v - f_vals[i];
        ad::Var loss = (r * r) * (w_r / static_cast<double>(n_res));
        tape.eval(fp.theta);
        total += tape.value(loss);
        const std::vector<double> g = tape.backward(loss);
        for (std::size_t p = 0; p < g.size(); ++p) grad[p] += g[p];
    }
    for (std::size_t i = 0; i < n_bnd; ++i) {
        ad::Tape tape;
        TapeModel tm = bind_model(tape, model);
        auto u = forward_tape(tm, Xbnd.subspan(2 * i, 2));
        ad::Var loss = (u[0] * u[0]) * (w_b / static_cast<double>(n_bnd));
        tape.eval(fp.theta);
        total += tape.value(loss);
        const std::vector<double> g = tape.backward(loss);
        for (std::size_t p = 0; p < g.size(); ++p) grad[p] += g[p];
    }
    return total;
}

} // namespace

ChunkPlan plan_chunks(std::size_t n, std::size_t params) {
    ChunkPlan plan;
    if (n == 0) return plan;
    const std::size_t target = 32;
    plan.chunk = std::max<std::size_t>(1, (n + target - 1) / target);
    const std::size_t mem_cap = std::size_t(256) << 20;
    while (((n + plan.chunk - 1) / plan.chunk) * params * sizeof(double) > mem_cap)
        plan.chunk *= 2;
    plan.nchunks = (n + plan.chunk - 1) / plan.chunk;
    return plan;
}

void Workspace::ensure(std::size_t nchunks, std::size_t params) {
    chunk_grad.assign(nchunks * params, 0.0);
    chunk_loss.assign(nchunks, 0.0);
}

double loss_grad_first_order(const KnnModel& model, std::span<const double> X,
                             std::span<const double> Y, std::size_t n, LossKind kind,
                             std::span<double> grad, Workspace& ws, Backend backend) {
    const FlatLayout fl = flat_layout(model);
    if (grad.size() != fl.total)
        throw std::invalid_argument("loss_grad_first_order: grad size mismatch");
    std::fill(grad.begin(), grad.end(), 0.0);
    if (n == 0) return 0.0;
    if ((kind == LossKind::bce_mean || kind == LossKind::mean_sq) && model.output_dim() != 1)
        throw std::invalid_argument("loss kind needs a scalar output");
    if (backend == Backend::tape) return loss_grad_first_order_tape(model, X, Y, n, kind, grad);

    const ChunkPlan plan = plan_chunks(n, fl.total);
    ws.ensure(plan.nchunks, fl.total);
    const int din = model.input_dim();
    const int dout = model.output_dim();
#ifdef _OPENMP
#pragma omp parallel
#endif
    {
        Scratch1 sc(model);
        std::vector<double> gu(static_cast<std::size_t>(dout));
#ifdef _OPENMP
#pragma omp for schedule(dynamic, 1)
#endif
        for (long long c = 0; c < static_cast<long long>(plan.nchunks); ++c) {
            double* cg = ws.chunk_grad.data() + static_cast<std::size_t>(c) * fl.total;
            double closs = 0.0;
            const std::size_t lo = static_cast<std::size_t>(c) * plan.chunk;
            const std::size_t hi = std::min(n, lo + plan.chunk);
            for (std::size_t i = lo; i < hi; ++i) {
                forward_sample_1(model, X.data() + i * static_cast<std::size_t>(din), sc);
                const double* u = sc.s[static_cast<std::size_t>(model.depth() - 1)].data();
                const double* y = Y.empty() ? nullptr : Y.data() + i * static_cast<std::size_t>(dout);
                closs += sample_loss_seed(kind, model, u, y, n, gu.data());
                backward_sample_1(model, fl, sc, gu.data(), cg);
            }
            ws.chunk_loss[static_cast<std::size_t>(c)] = closs;
        }
    }
    double total = 0.0;
    for (std::size_t c = 0; c < plan.nchunks; ++c) {
        total += ws.chunk_loss[c];
        const double* cg = ws.chunk_grad.data() + c * fl.total;
        for (std::size_t p = 0; p < fl.total; ++p) grad[p] += cg[p];
    }
    return total;
}

double loss_grad_helmholtz(const KnnModel& model, std::span<const double> Xres,
                           std::span<const double> f_vals, std::size_t n_res, double k2,
                           std::span<const double> Xbnd, std::size_t n_bnd, double w_r,
                           double w_b, std::span<double> grad, Workspace& ws, Backend backend) {
    if (model.input_dim() != 2 || model.output_dim() != 1)
        throw std::invalid_argument("helmholtz loss: model must map 2 inputs to 1 output");
    if (model.family.has_kink())
        throw std::invalid_argument(
            "helmholtz loss: family has a kink slot; the PDE residual needs C^2 activations");
    const FlatLayout fl = flat_layout(model);
    if (grad.size() != fl.total) throw std::invalid_argument("helmholtz loss: grad size mismatch");
    std::fill(grad.begin(), grad.end(), 0.0);
    if (backend == Backend::tape)
        return loss_grad_helmholtz_tape(model, Xres, f_vals, n_res, k2, Xbnd, n_bnd, w_r, w_b,
                                        grad);

    double total = 0.0;
    // interior residual pass
    if (n_res > 0) {
        const ChunkPlan plan = plan_chunks(n_res, fl.total);
        ws.ensure(plan.nchunks, fl.total);
        const double scale = w_r / static_cast<double>(n_res);
#ifdef _OPENMP
#pragma omp parallel
#endif
        {
            Scratch2 sc(model);
#ifdef _OPENMP
#pragma omp for schedule(dynamic, 1)
#endif
            for (long long c = 0; c < static_cast<long long>(plan.nchunks); ++c) {
                double* cg = ws.chunk_grad.data() + static_cast<std::size_t>(c) * fl.total;
                double closs = 0.0;
                const std::size_t lo = static_cast<std::size_t>(c) * plan.chunk;
                const std::size_t hi = std::min(n_res, lo + plan.chunk);
                for (std::size_t i = lo; i < hi; ++i) {
                    double u = 0.0, lap = 0.0;
                    forward_sample_2(model, Xres[2 * i], Xres[2 * i + 1], sc, u, lap);
                    const double r = lap + k2 * u - f_vals[i];
                    closs += scale * r * r;
                    const double seed = 2.0 * scale * r;
                    backward_sample_2(model, fl, sc, seed * k2, seed, cg);
                }
                ws.chunk_loss[static_cast<std::size_t>(c)] = closs;
            }
        }
        for (std::size_t c = 0; c < plan.nchunks; ++c) {
            total += ws.chunk_loss[c];
            const double* cg = ws.chunk_grad.data() + c * fl.total;
            for (std::size_t p = 0; p < fl.total; ++p) grad[p] += cg[p];
        }
    }
    // boundary pass (first-order): w_b * mean u^2
    if (n_bnd > 0) {
        const ChunkPlan plan = plan_chunks(n_bnd, fl.total);
        ws.ensure(plan.nchunks, fl.total);
        const double scale = w_b / static_cast<double>(n_bnd);
#ifdef _OPENMP
#pragma omp parallel
#endif
        {
            Scratch1 sc(model);
#ifdef _OPENMP
#pragma omp for schedule(dynamic, 1)
#endif
            for (long long c = 0; c < static_cast<long long>(plan.nchunks); ++c) {
                double* cg = ws.chunk_grad.data() + static_cast<std::size_t>(c) * fl.total;
                double closs = 0.0;
                const std::size_t lo = static_cast<std::size_t>(c) * plan.chunk;
                const std::size_t hi = std::min(n_bnd, lo + plan.chunk);
                for (std::size_t i = lo; i < hi; ++i) {
                    forward_sample_1(model, Xbnd.data() + 2 * i, sc);
                    const double u = sc.s[static_cast<std::size_t>(model.depth() - 1)][0];
                    closs += scale * u * u;
                    const double gu = 2.0 * scale * u;
                    backward_sample_1(model, fl, sc, &gu, cg);
                }
                ws.chunk_loss[static_cast<std::size_t>(c)] = closs;
            }
        }
        for (std::size_t c = 0; c < plan.nchunks; ++c) {
            total += ws.chunk_loss[c];
            const double* cg = ws.chunk_grad.data() + c * fl.total;
            for (std::size_t p = 0; p < fl.total; ++p) grad[p] += cg[p];
        }
    }
    return total;
}

double loss_first_order(const KnnModel& model, std::span<const double> X,
                        std::span<const double> Y, std::size_t n, LossKind kind) {
    const int din = model.input_dim();
    const int dout = model.output_dim();
    Scratch1 sc(model);
    std::vector<double> gu(static_cast<std::size_t>(dout));
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        forward_sample_1(model, X.data() + i * static_cast<std::size_t>(din), sc);
        const double* u = sc.s[static_cast<std::size_t>(model.depth() - 1)].data();
        const double* y = Y.empty() ? nullptr : Y.data() + i * static_cast<std::size_t>(dout);
        total += sample_loss_seed(kind, model, u, y, n, gu.data());
    }
    return total;
}

double loss_helmholtz(const KnnModel& model, std::span<const double> Xres,
                      std::span<const double> f_vals, std::size_t n_res, double k2,
                      std::span<const double> Xbnd, std::size_t n_bnd, double w_r, double w_b) {
    Scratch2 sc2(model);
    Scratch1 sc1(model);
    double total = 0.0;
    for (std::size_t i = 0; i < n_res; ++i) {
        double u = 0.0, lap = 0.0;
        forward_sample_2(model, Xres[2 * i], Xres[2 * i + 1], sc2, u, lap);
        const double r = lap + k2 * u - f_vals[i];
        total += w_r * r * r / static_cast<double>(n_res);
    }
    for (std::size_t i = 0; i < n_bnd; ++i) {
        forward_sample_1(model, Xbnd.data() + 2 * i, sc1);
        const double u = sc1.s[static_cast<std::size_t>(model.depth() - 1)][0];
        total += w_b * u * u / static_cast<double>(n_bnd);
    }
    return total;
}

void forward_batch(const KnnModel& model, std::span<const double> X, std::size_t n,
                   std::span<double> U) {
    const int din = model.input_dim();
    const int dout = model.output_dim();
#ifdef _OPENMP
#pragma omp parallel
#endif
    {
        Scratch1 sc(model);
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            forward_sample_1(model, X.data() + static_cast<std::size_t>(i) * din, sc);
            const double* u = sc.s[static_cast<std::size_t>(model.depth() - 1)].data();
            for (int o = 0; o < dout; ++o)
                U[static_cast<std::size_t>(i) * dout + static_cast<std::size_t>(o)] = u[o];
        }
    }
}

} // namespace kronnet::kern
