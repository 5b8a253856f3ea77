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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace kronnet::ad {

class Tape;

/// Handle to one tape node. Arithmetic on Vars appends nodes.
struct Var {
    Tape* tape = nullptr;
    std::int32_t idx = -1;
};

/// Value, first and second derivative w.r.t. one chosen input coordinate.
/// Each field is a tape node, so parameter gradients of any of the three
/// are available through backward().
struct Jet2 {
    Var v;
    Var d1;
    Var d2;
};

enum class Op : std::uint8_t {
    input,
    constant,
    add,
    sub,
    mul,
    div,
    neg,
    scale, // aux * a
    sin,
    cos,
    tanh,
    exp,
    log,
    sqrt,
    relu,     // max(a, 0); derivative at 0 is 0 (subgradient convention)
    elu_neg,  // (e^a - 1) for a <= 0, else 0; derivative at 0 taken from the left (=1)
    sigmoid,
    softplus, // log(1 + e^a), overflow-safe
    powi,     // a^n, n = int(aux) >= 0
    step,     // a > 0 ? 1 : 0, derivative identically 0 (kink convention)
    exp_neg,  // a <= 0 ? e^a : 0, derivative = value
};

/// Append-only scalar computation graph.
///
/// Parent indices strictly precede the node index, so a single forward
/// sweep evaluates the graph and a single reverse sweep accumulates
/// adjoints. Evaluation is pure: identical inputs give bit-identical
/// values. A tape is owned by one thread; independent tapes may run
/// concurrently.
class Tape {
public:
    Tape() = default;

    /// New input slot. Slots are bound positionally by eval().
    Var input(std::string name = {});
    Var constant(double v);

    int num_inputs() const { return static_cast<int>(input_nodes_.size()); }
    std::size_t size() const { return nodes_.size(); }

    /// Computes every node value. Throws std::invalid_argument naming the
    /// first unbound slot if inputs.size() < num_inputs().
    void eval(std::span<const double> inputs);

    double value(Var x) const;

    /// Reverse sweep from `output`; returns d output / d input_slot for
    /// every slot, in slot order. Requires a prior eval().
    /// Throws std::out_of_range for a bad output index.
    std::vector<double> backward(Var output);

    /// Drops all nodes; input slots are forgotten too.
    void reset();

    Var emit(Op op, std::int32_t a, std::int32_t b, double aux = 0.0);

private:
    struct Node {
        Op op;
        std::int32_t a = -1;
        std::int32_t b = -1;
        double aux = 0.0;
    };

    std::vector<Node> nodes_;
    std::vector<double> val_;
    std::vector<double> adj_;
    std::vector<std::int32_t> input_nodes_;
    std::vector<std::string> input_names_;
    bool evaluated_ = false;
};

// Var arithmetic. Mixed Var/double forms wrap the double as a constant
// (or a scale node where that is cheaper).
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double c);
Var operator+(double c, Var a);
Var operator-(Var a, double c);
Var operator-(double c, Var a);
Var operator*(Var a, double c);
Var operator*(double c, Var a);
Var operator/(Var a, double c);

Var sin(Var a);
Var cos(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var sqrt(Var a);
Var relu(Var a);
Var elu_neg(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var powi(Var a, int n);
Var step(Var a);
Var exp_neg(Var a);

/// Central finite difference d f / d x_i with step h; the independent
/// oracle used by the gradient tests.
template <class F>
double central_diff(F&& f, std::vector<double> x, std::size_t i, double h) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = f(x);
    x[i] = x0 - h;
    const double dn = f(x);
    return (up - dn) / (2.0 * h);
}

} // namespace kronnet::ad
