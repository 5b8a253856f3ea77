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

#include "kronnet/training.hpp"

#include "kronnet/rng.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace kronnet::train {

const char* loss_name(LossType t) {
    switch (t) {
    case LossType::square: return "square";
    case LossType::bce: return "bce";
    case LossType::pinn: return "pinn";
    }
    return "?";
}

LossType loss_from_name(const std::string& name) {
    for (LossType t : {LossType::square, LossType::bce, LossType::pinn})
        if (name == loss_name(t)) return t;
    throw std::invalid_argument("unknown loss '" + name + "'");
}

const char* opt_name(OptKind k) {
    switch (k) {
    case OptKind::gd: return "gd";
    case OptKind::sgd_momentum: return "sgd-momentum";
    case OptKind::adam: return "adam";
    }
    return "?";
}

OptKind opt_from_name(const std::string& name) {
    for (OptKind k : {OptKind::gd, OptKind::sgd_momentum, OptKind::adam})
        if (name == opt_name(k)) return k;
    throw std::invalid_argument("unknown optimizer '" + name + "'");
}

long RunRecord::iters_to_threshold(double threshold) const {
    for (std::size_t i = 0; i < losses.size(); ++i)
        if (losses[i] <= threshold) return iters[i];
    return -1;
}

void write_run_csv(const std::string& path, const RunRecord& rec,
                   std::span<const std::string> comments) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    for (const std::string& c : comments) os << "# " << c << "\n";
    os << "iteration,loss,metric,phase,wall_ms\n";
    os.precision(17);
    std::size_t mi = 0;
    for (std::size_t i = 0; i < rec.iters.size(); ++i) {
        double metric = std::nan("");
        if (mi < rec.metric_iters.size() && rec.metric_iters[mi] == rec.iters[i])
            metric = rec.metrics[mi++];
        os << rec.iters[i] << "," << rec.losses[i] << "," << metric << "," << rec.phase_at[i]
           << "," << rec.wall_ms[i] << "\n";
    }
}

namespace {

bool decays(const FlatParams& layout, std::size_t i) {
    return layout.kind[i] == ParamKind::weight || layout.kind[i] == ParamKind::bias;
}

} // namespace

void adam_step(AdamState& st, std::span<double> theta, std::span<const double> grad,
               const FlatParams& layout, const OptimizerSpec& spec) {
    if (st.m.size() != theta.size()) {
        st.m.assign(theta.size(), 0.0);
        st.v.assign(theta.size(), 0.0);
        st.t = 0;
    }
    ++st.t;
    const double bc1 = 1.0 - std::pow(spec.beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(spec.beta2, static_cast<double>(st.t));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (!layout.trainable[i]) continue;
        const double g = grad[i];
        st.m[i] = spec.beta1 * st.m[i] + (1.0 - spec.beta1) * g;
        st.v[i] = spec.beta2 * st.v[i] + (1.0 - spec.beta2) * g * g;
        const double mhat = st.m[i] / bc1;
        const double vhat = st.v[i] / bc2;
        theta[i] -= spec.lr * mhat / (std::sqrt(vhat) + spec.eps);
        if (spec.weight_decay > 0.0 && decays(layout, i))
            theta[i] -= spec.lr * spec.weight_decay * theta[i];
    }
}

void sgd_step(SgdState& st, std::span<double> theta, std::span<const double> grad,
              const FlatParams& layout, const OptimizerSpec& spec) {
    if (st.vel.size() != theta.size()) st.vel.assign(theta.size(), 0.0);
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (!layout.trainable[i]) continue;
        st.vel[i] = spec.momentum * st.vel[i] + grad[i];
        theta[i] -= spec.lr * st.vel[i];
        if (spec.weight_decay > 0.0 && decays(layout, i))
            theta[i] -= spec.lr * spec.weight_decay * theta[i];
    }
}

std::pair<double, std::vector<double>> compute_loss(const KnnModel& model, const TrainData& data,
                                                    const LossSpec& loss, kern::Workspace& ws,
                                                    kern::Backend backend) {
    std::vector<double> grad(param_count(model));
    double value = 0.0;
    switch (loss.kind) {
    case LossType::square:
        if (data.n == 0) throw std::invalid_argument("compute_loss: empty batch");
        value = kern::loss_grad_first_order(model, data.X, data.Y,
                                            static_cast<std::size_t>(data.n),
                                            kern::LossKind::square_sum, grad, ws, backend);
        break;
    case LossType::bce:
        if (data.n == 0) throw std::invalid_argument("compute_loss: empty batch");
        value = kern::loss_grad_first_order(model, data.X, data.Y,
                                            static_cast<std::size_t>(data.n),
                                            kern::LossKind::bce_mean, grad, ws, backend);
        break;
    case LossType::pinn:
        if (data.n_res == 0) throw std::invalid_argument("compute_loss: no residual points");
        value = kern::loss_grad_helmholtz(
            model, data.Xres, data.Fres, static_cast<std::size_t>(data.n_res), loss.k * loss.k,
            data.Xbnd, static_cast<std::size_t>(data.n_bnd), loss.w_residual, loss.w_boundary,
            grad, ws, backend);
        break;
    }
    return {value, std::move(grad)};
}

void apply_schedule_transition(KnnModel& model, const SchemeSpec& to, bool zero_fluctuations) {
    if (to.base != model.scheme.base)
        throw std::invalid_argument("schedule transition: base activation mismatch");
    if (to.kind == model.scheme.kind && to.terms == model.scheme.terms) return; // identity
    if (to.kind != SchemeKind::llaaf)
        throw std::invalid_argument("schedule transition: only switches to llaaf are supported");
    // keep {W, b} and the base slope omega_1; fluctuation slots stop
    // training (frozen at their values, or zeroed out)
    for (KnnLayer& l : model.layers) {
        if (l.adaptive.size() == 0) continue;
        for (int k = 0; k < l.adaptive.size(); ++k) {
            l.adaptive.alpha_trainable[static_cast<std::size_t>(k)] = 0;
            l.adaptive.omega_trainable[static_cast<std::size_t>(k)] = k == 0;
            if (zero_fluctuations && k >= 1) l.adaptive.alpha[static_cast<std::size_t>(k)] = 0.0;
        }
    }
}

RunRecord train(KnnModel& model, const TrainData& data, const OptimizerSpec& opt,
                const LossSpec& loss, const Schedule& schedule, std::uint64_t seed,
                const TrainOptions& options) {
    RunRecord rec;
    rec.beta1 = opt.beta1;
    rec.beta2 = opt.beta2;
    rec.eps = opt.eps;

    FlatParams layout = flatten(model);
    std::vector<double> theta = layout.theta;
    AdamState adam;
    SgdState sgd;
    kern::Workspace ws;
    Rng rng(seed);

    const bool minibatched = loss.kind != LossType::pinn && opt.batch > 0 && opt.batch < data.n;
    std::vector<std::size_t> order(static_cast<std::size_t>(data.n));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::size_t cursor = 0;
    TrainData batch;
    if (minibatched) {
        batch.din = data.din;
        batch.dout = data.dout;
        rng.shuffle(order);
    }

    std::size_t phase_idx = 0;
    auto phase_name = [&](long it) -> std::string {
        if (schedule.phases.empty()) return model.scheme.name();
        std::size_t p = 0;
        for (std::size_t i = 0; i < schedule.phases.size(); ++i) {
            const Phase& ph = schedule.phases[i];
            if (it >= ph.start && (ph.end < 0 || it < ph.end)) p = i;
        }
        return schedule.phases[p].scheme.name();
    };

    const auto t0 = std::chrono::steady_clock::now();
    auto wall = [&]() {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    };

    auto record = [&](long it, double L) {
        rec.iters.push_back(it);
        rec.losses.push_back(L);
        rec.phase_at.push_back(phase_name(it));
        rec.wall_ms.push_back(wall());
    };
    auto snapshot = [&](long it) {
        if (!options.metric) return;
        rec.metric_iters.push_back(it);
        rec.metrics.push_back(options.metric(model));
    };

    for (long it = 0; it < opt.iterations; ++it) {
        // phase switch at its start iteration
        if (!schedule.phases.empty() && phase_idx + 1 < schedule.phases.size() &&
            it == schedule.phases[phase_idx + 1].start) {
            ++phase_idx;
            unflatten(model, theta);
            apply_schedule_transition(model, schedule.phases[phase_idx].scheme,
                                      options.transition_zero);
            layout = flatten(model);
            theta = layout.theta;
            adam = AdamState{};
            sgd = SgdState{};
            rec.transition_iter = it;
        }

        const TrainData* step_data = &data;
        if (minibatched) {
            const int b = opt.batch;
            batch.n = 0;
            batch.X.clear();
            batch.Y.clear();
            for (int i = 0; i < b; ++i) {
                if (cursor == order.size()) {
                    rng.shuffle(order);
                    cursor = 0;
                }
                const std::size_t idx = order[cursor++];
                for (int dd = 0; dd < data.din; ++dd)
                    batch.X.push_back(data.X[idx * static_cast<std::size_t>(data.din) + dd]);
                for (int dd = 0; dd < data.dout; ++dd)
                    batch.Y.push_back(data.Y[idx * static_cast<std::size_t>(data.dout) + dd]);
                ++batch.n;
            }
            step_data = &batch;
        }

        unflatten(model, theta);
        auto [L, grad] = compute_loss(model, *step_data, loss, ws, options.backend);
        if (!std::isfinite(L)) {
            rec.early_stop = true;
            rec.stop_reason = "non-finite loss at iteration " + std::to_string(it);
            record(it, L);
            break;
        }
        if (it % options.record_every == 0) record(it, L);
        if (options.eval_every > 0 && it % options.eval_every == 0) snapshot(it);
        if (options.checkpoint_every > 0 && !options.checkpoint_path.empty() &&
            it % options.checkpoint_every == 0) {
            save_checkpoint_file(options.checkpoint_path + "." + std::to_string(it), model,
                                 options.checkpoint_seed);
        }

        switch (opt.kind) {
        case OptKind::gd:
            for (std::size_t i = 0; i < theta.size(); ++i)
                if (layout.trainable[i]) theta[i] -= opt.lr * grad[i];
            break;
        case OptKind::sgd_momentum:
            sgd_step(sgd, theta, grad, layout, opt);
            break;
        case OptKind::adam:
            adam_step(adam, theta, grad, layout, opt);
            break;
        }
    }

    unflatten(model, theta);
    if (!rec.early_stop) {
        // closing record on the full data
        auto [L, grad] = compute_loss(model, data, loss, ws, options.backend);
        (void)grad;
        record(opt.iterations, L);
        snapshot(opt.iterations);
    }
    return rec;
}

} // namespace kronnet::train
