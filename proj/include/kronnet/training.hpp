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

#include "kronnet/kernels.hpp"
#include "kronnet/network.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace kronnet::train {

enum class LossType : std::uint8_t { square, bce, pinn };

const char* loss_name(LossType t);
LossType loss_from_name(const std::string& name);

struct LossSpec {
    LossType kind = LossType::square;
    // pinn composite weights and wavenumber
    double w_residual = 1.0;
    double w_boundary = 1.0;
    double k = 1.0;
};

enum class OptKind : std::uint8_t { gd, sgd_momentum, adam };

const char* opt_name(OptKind k);
OptKind opt_from_name(const std::string& name);

struct OptimizerSpec {
    OptKind kind = OptKind::adam;
    double lr = 1e-3;
    double momentum = 0.0;     // sgd_momentum
    double weight_decay = 0.0; // decoupled, W and b only
    int batch = 0;             // 0 = full batch
    long iterations = 1000;    // optimizer steps
    // Adam defaults; the paper does not state them
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct Phase {
    SchemeSpec scheme;
    long start = 0;
    long end = -1; // -1 = to the end
};

struct Schedule {
    std::vector<Phase> phases; // empty = stay on the model's scheme
};

/// Everything a run consumes: either a plain supervised set or the PINN
/// collocation sets. Forcing values are precomputed at the residual points.
struct TrainData {
    // supervised
    std::vector<double> X, Y;
    int n = 0, din = 1, dout = 1;
    // pinn
    std::vector<double> Xres, Fres, Xbnd;
    int n_res = 0, n_bnd = 0;
};

struct RunRecord {
    std::vector<long> iters;
    std::vector<double> losses;
    std::vector<std::string> phase_at;
    std::vector<double> wall_ms;
    std::vector<long> metric_iters;
    std::vector<double> metrics;
    long transition_iter = -1;
    bool early_stop = false;
    std::string stop_reason;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8; // echoed Adam settings

    double final_loss() const { return losses.empty() ? 0.0 : losses.back(); }
    double final_metric() const { return metrics.empty() ? 0.0 : metrics.back(); }
    /// first recorded iteration with loss <= threshold, or -1
    long iters_to_threshold(double threshold) const;
};

/// Serialize as CSV: iteration,loss,metric,phase,wall_ms (metric is nan
/// between snapshots). Comment lines carry caller-provided metadata.
void write_run_csv(const std::string& path, const RunRecord& rec,
                   std::span<const std::string> comments);

struct AdamState {
    std::vector<double> m, v;
    long t = 0;
};
struct SgdState {
    std::vector<double> vel;
};

/// One Adam step with bias correction; decoupled weight decay applied to
/// weight/bias entries only, fixed entries untouched.
void adam_step(AdamState& st, std::span<double> theta, std::span<const double> grad,
               const FlatParams& layout, const OptimizerSpec& spec);
/// Heavy-ball SGD, same masking and decay rules.
void sgd_step(SgdState& st, std::span<double> theta, std::span<const double> grad,
              const FlatParams& layout, const OptimizerSpec& spec);

/// Loss and full flat gradient for the spec'd loss on the given data.
std::pair<double, std::vector<double>> compute_loss(const KnnModel& model, const TrainData& data,
                                                    const LossSpec& loss, kern::Workspace& ws,
                                                    kern::Backend backend = kern::Backend::fused);

/// Scheme switch along a schedule: keeps {W, b} and the base slope
/// omega_1. Switching to llaaf freezes alpha_{k>=2}, omega_{k>=2} at
/// their trained values (or zeroes the amplitudes with zero_fluctuations).
void apply_schedule_transition(KnnModel& model, const SchemeSpec& to, bool zero_fluctuations);

using MetricFn = std::function<double(const KnnModel&)>;

struct TrainOptions {
    kern::Backend backend = kern::Backend::fused;
    int record_every = 1;
    int eval_every = 0; // 0 = never
    MetricFn metric;
    bool transition_zero = false;
    std::string checkpoint_path; // empty = no checkpoints
    long checkpoint_every = 0;
    std::uint64_t checkpoint_seed = 0;
};

/// Deterministic for a fixed (seed, spec): minibatch order comes from the
/// seeded generator, gradient reduction is order-fixed. Non-finite loss
/// stops the run early with a diagnostic.
RunRecord train(KnnModel& model, const TrainData& data, const OptimizerSpec& opt,
                const LossSpec& loss, const Schedule& schedule, std::uint64_t seed,
                const TrainOptions& options = {});

} // namespace kronnet::train
