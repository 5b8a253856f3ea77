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
#include "kronnet/tape.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace kronnet {

struct KnnLayer {
    int in = 0;
    int out = 0;
    std::vector<double> W; // row-major, out x in
    std::vector<double> b;
    AdaptiveParams adaptive; // empty on the output layer (identity after it)
    std::uint8_t w_trainable = 1;
    std::uint8_t b_trainable = 1;
};

struct KnnModel {
    std::vector<KnnLayer> layers;
    ActivationFamily family;
    SchemeSpec scheme;

    int depth() const { return static_cast<int>(layers.size()); }
    int input_dim() const { return layers.front().in; }
    int output_dim() const { return layers.back().out; }
    int terms() const { return family.size(); }
};

enum class ParamKind : std::uint8_t { weight, bias, alpha, omega };

/// Flat view of all parameters in the stable layout
/// [W^1 b^1 ... W^D b^D][alpha^1 omega^1 ... alpha^{D-1} omega^{D-1}].
struct FlatParams {
    std::vector<double> theta;
    std::vector<ParamKind> kind;
    std::vector<std::uint8_t> trainable;

    std::size_t size() const { return theta.size(); }
    std::size_t trainable_count() const;
};

FlatParams flatten(const KnnModel& model);
void unflatten(KnnModel& model, std::span<const double> theta);
std::size_t param_count(const KnnModel& model);
/// Parameter count of the plain FFN with the same widths.
std::size_t ffn_param_count(std::span<const int> widths);

/// Offsets of each parameter group in the flat layout.
struct FlatLayout {
    std::vector<std::size_t> w_off, b_off, a_off, o_off; // per layer
    std::size_t total = 0;
};
FlatLayout flat_layout(const KnnModel& model);

/// The efficient composition: (L_D . phi~^{D-1} . ... . phi~^1 . L_1)(x).
std::vector<double> forward(const KnnModel& model, std::span<const double> x);

/// Reference path: materializes the scaled block weight matrices and block
/// bias vectors and applies the block activation. Never used for training.
/// Throws if K * max_width exceeds `width_cap`.
std::vector<double> forward_block(const KnnModel& model, std::span<const double> x,
                                  int width_cap = 4096);

/// Model parameters bound to tape input slots (flat layout order).
struct TapeModel {
    const KnnModel* model = nullptr;
    ad::Tape* tape = nullptr;
    std::vector<ad::Var> theta;

    ad::Var w(int layer, int i, int j) const;
    ad::Var b(int layer, int i) const;
    std::span<const ad::Var> alpha(int layer) const;
    std::span<const ad::Var> omega(int layer) const;
};

TapeModel bind_model(ad::Tape& tape, const KnnModel& model);

std::vector<ad::Var> forward_tape(const TapeModel& tm, std::span<const double> x);

/// Order-2 jet propagation in input coordinate `coord`: returns
/// (u, du/dx_c, d2u/dx_c2) per output, all as tape nodes. Requires
/// coord < input_dim; activations use analytic phi'' (relu's phi'' is 0
/// away from 0 by convention).
std::vector<ad::Jet2> jet_forward(const TapeModel& tm, std::span<const double> x, int coord);

enum class InitScheme : std::uint8_t { theory, theorem32, practice };

const char* init_scheme_name(InitScheme s);
InitScheme init_scheme_from_name(const std::string& name);

struct InitOptions {
    // practice: W ~ N(0, std), std = fixed value or 1/sqrt(fan_in)
    bool weight_std_fixed = false;
    double weight_std = 0.05;
    // theorem32: c_i = |y| / (K N sqrt(m)) * xi_i
    double y_norm = 1.0;
    int data_m = 1;
    bool xi_01 = false; // literal Bernoulli {0,1} instead of Rademacher
};

/// Deterministic per seed; identical seeds give bit-identical models.
KnnModel init_model(std::span<const int> widths, const SchemeSpec& scheme, InitScheme init,
                    std::uint64_t seed, const InitOptions& opts = {});

// Versioned text checkpoint (hexfloat payload, exact round trip).
void save_checkpoint(std::ostream& os, const KnnModel& model, std::uint64_t seed);
KnnModel load_checkpoint(std::istream& is, std::uint64_t* seed_out = nullptr);
void save_checkpoint_file(const std::string& path, const KnnModel& model, std::uint64_t seed);
KnnModel load_checkpoint_file(const std::string& path, std::uint64_t* seed_out = nullptr);

} // namespace kronnet
