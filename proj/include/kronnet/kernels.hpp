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

#include "kronnet/network.hpp"

#include <span>
#include <vector>

namespace kronnet::kern {

/// fused: hand-derived layer-wise backprop, OpenMP over sample chunks.
/// tape:  per-sample scalar tapes, sequential; the reference the fused
///        kernels are tested against.
enum class Backend : std::uint8_t { fused, tape };

enum class LossKind : std::uint8_t {
    square_sum, // 1/2 sum_j |u(x_j) - y_j|^2  (the 1/2 matters downstream)
    bce_mean,   // mean binary cross-entropy on a single logit
    mean_sq,    // mean_j u(x_j)^2 (homogeneous boundary misfit)
};

/// Samples are split into fixed-size chunks, each chunk accumulated
/// sequentially and the chunk partials combined in index order, so the
/// reduction tree does not depend on the thread count. Chunk size is a
/// pure function of (n, params) with a memory cap on the buffers.
struct ChunkPlan {
    std::size_t chunk = 1;
    std::size_t nchunks = 0;
};
ChunkPlan plan_chunks(std::size_t n, std::size_t params);

struct Workspace {
    std::vector<double> chunk_grad;
    std::vector<double> chunk_loss;
    void ensure(std::size_t nchunks, std::size_t params);
};

/// Batch loss and d loss / d theta (flat layout, every slot filled; the
/// trainability masks are applied by the optimizer). X is row-major
/// n x input_dim; Y is n x output_dim (n x 1 for bce_mean; empty for
/// mean_sq). Returns the loss.
double loss_grad_first_order(const KnnModel& model, std::span<const double> X,
                             std::span<const double> Y, std::size_t n, LossKind kind,
                             std::span<double> grad, Workspace& ws,
                             Backend backend = Backend::fused);

/// PINN composite loss
///   w_r * mean_r (u_xx + u_yy + k2 u - f)^2 + w_b * mean_b u^2
/// for a scalar-output model on 2-d inputs. f_vals are the forcing values
/// at the interior points. Throws if the family has a kink slot.
double loss_grad_helmholtz(const KnnModel& model, std::span<const double> Xres,
                           std::span<const double> f_vals, std::size_t n_res, double k2,
                           std::span<const double> Xbnd, std::size_t n_bnd, double w_r,
                           double w_b, std::span<double> grad, Workspace& ws,
                           Backend backend = Backend::fused);

/// Loss only (no gradient), same definitions.
double loss_first_order(const KnnModel& model, std::span<const double> X,
                        std::span<const double> Y, std::size_t n, LossKind kind);
double loss_helmholtz(const KnnModel& model, std::span<const double> Xres,
                      std::span<const double> f_vals, std::size_t n_res, double k2,
                      std::span<const double> Xbnd, std::size_t n_bnd, double w_r, double w_b);

/// U = model(X) for n points, parallel over points.
void forward_batch(const KnnModel& model, std::span<const double> X, std::size_t n,
                   std::span<double> U);

} // namespace kronnet::kern
