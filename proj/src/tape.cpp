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

#include "kronnet/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace kronnet::ad {

namespace {

double softplus_stable(double x) {
    // max(x,0) + log1p(exp(-|x|))
    return (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double powi_val(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

} // namespace

Var Tape::input(std::string name) {
    Var v = emit(Op::input, -1, -1, 0.0);
    input_nodes_.push_back(v.idx);
    if (name.empty()) name = "input[" + std::to_string(input_nodes_.size() - 1) + "]";
    input_names_.push_back(std::move(name));
    return v;
}

Var Tape::constant(double v) { return emit(Op::constant, -1, -1, v); }

Var Tape::emit(Op op, std::int32_t a, std::int32_t b, double aux) {
    nodes_.push_back(Node{op, a, b, aux});
    evaluated_ = false;
    return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

void Tape::eval(std::span<const double> inputs) {
    if (inputs.size() < input_nodes_.size()) {
        throw std::invalid_argument("tape eval: unbound input slot '" +
                                    input_names_[inputs.size()] + "'");
    }
    const std::size_t n = nodes_.size();
    val_.resize(n);
    std::size_t next_input = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Node& nd = nodes_[i];
        double v = 0.0;
        switch (nd.op) {
        case Op::input: v = inputs[next_input++]; break;
        case Op::constant: v = nd.aux; break;
        case Op::add: v = val_[nd.a] + val_[nd.b]; break;
        case Op::sub: v = val_[nd.a] - val_[nd.b]; break;
        case Op::mul: v = val_[nd.a] * val_[nd.b]; break;
        case Op::div: v = val_[nd.a] / val_[nd.b]; break;
        case Op::neg: v = -val_[nd.a]; break;
        case Op::scale: v = nd.aux * val_[nd.a]; break;
        case Op::sin: v = std::sin(val_[nd.a]); break;
        case Op::cos: v = std::cos(val_[nd.a]); break;
        case Op::tanh: v = std::tanh(val_[nd.a]); break;
        case Op::exp: v = std::exp(val_[nd.a]); break;
        case Op::log: v = std::log(val_[nd.a]); break;
        case Op::sqrt: v = std::sqrt(val_[nd.a]); break;
        case Op::relu: v = val_[nd.a] > 0.0 ? val_[nd.a] : 0.0; break;
        case Op::elu_neg: v = val_[nd.a] <= 0.0 ? std::expm1(val_[nd.a]) : 0.0; break;
        case Op::sigmoid: v = 1.0 / (1.0 + std::exp(-val_[nd.a])); break;
        case Op::softplus: v = softplus_stable(val_[nd.a]); break;
        case Op::powi: v = powi_val(val_[nd.a], static_cast<int>(nd.aux)); break;
        case Op::step: v = val_[nd.a] > 0.0 ? 1.0 : 0.0; break;
        case Op::exp_neg: v = val_[nd.a] <= 0.0 ? std::exp(val_[nd.a]) : 0.0; break;
        }
        val_[i] = v;
    }
    evaluated_ = true;
}

double Tape::value(Var x) const {
    if (!evaluated_) throw std::logic_error("tape value: eval() has not run");
    return val_.at(static_cast<std::size_t>(x.idx));
}

std::vector<double> Tape::backward(Var output) {
    if (!evaluated_) throw std::logic_error("tape backward: eval() has not run");
    if (output.idx < 0 || static_cast<std::size_t>(output.idx) >= nodes_.size()) {
        throw std::out_of_range("tape backward: output index " +
                                std::to_string(output.idx) + " out of range");
    }
    const std::size_t n = nodes_.size();
    adj_.assign(n, 0.0);
    adj_[static_cast<std::size_t>(output.idx)] = 1.0;
    for (std::size_t ip1 = n; ip1 > 0; --ip1) {
        const std::size_t i = ip1 - 1;
        const double g = adj_[i];
        if (g == 0.0) continue;
        const Node& nd = nodes_[i];
        switch (nd.op) {
        case Op::input:
        case Op::constant: break;
        case Op::add:
            adj_[nd.a] += g;
            adj_[nd.b] += g;
            break;
        case Op::sub:
            adj_[nd.a] += g;
            adj_[nd.b] -= g;
            break;
        case Op::mul:
            adj_[nd.a] += g * val_[nd.b];
            adj_[nd.b] += g * val_[nd.a];
            break;
        case Op::div:
            adj_[nd.a] += g / val_[nd.b];
            adj_[nd.b] -= g * val_[i] / val_[nd.b];
            break;
        case Op::neg: adj_[nd.a] -= g; break;
        case Op::scale: adj_[nd.a] += g * nd.aux; break;
        case Op::sin: adj_[nd.a] += g * std::cos(val_[nd.a]); break;
        case Op::cos: adj_[nd.a] -= g * std::sin(val_[nd.a]); break;
        case Op::tanh: adj_[nd.a] += g * (1.0 - val_[i] * val_[i]); break;
        case Op::exp: adj_[nd.a] += g * val_[i]; break;
        case Op::log: adj_[nd.a] += g / val_[nd.a]; break;
        case Op::sqrt: adj_[nd.a] += g * 0.5 / val_[i]; break;
        case Op::relu: adj_[nd.a] += val_[nd.a] > 0.0 ? g : 0.0; break;
        case Op::elu_neg:
            adj_[nd.a] += val_[nd.a] <= 0.0 ? g * std::exp(val_[nd.a]) : 0.0;
            break;
        case Op::sigmoid: adj_[nd.a] += g * val_[i] * (1.0 - val_[i]); break;
        case Op::softplus:
            adj_[nd.a] += g / (1.0 + std::exp(-val_[nd.a]));
            break;
        case Op::powi: {
            const int p = static_cast<int>(nd.aux);
            if (p != 0) adj_[nd.a] += g * p * powi_val(val_[nd.a], p - 1);
            break;
        }
        case Op::step: break;
        case Op::exp_neg: adj_[nd.a] += g * val_[i]; break;
        }
    }
    std::vector<double> grad(input_nodes_.size());
    for (std::size_t k = 0; k < input_nodes_.size(); ++k) {
        grad[k] = adj_[static_cast<std::size_t>(input_nodes_[k])];
    }
    return grad;
}

void Tape::reset() {
    nodes_.clear();
    val_.clear();
    adj_.clear();
    input_nodes_.clear();
    input_names_.clear();
    evaluated_ = false;
}

namespace {
Var binary(Op op, Var a, Var b) { return a.tape->emit(op, a.idx, b.idx); }
Var unary(Op op, Var a, double aux = 0.0) { return a.tape->emit(op, a.idx, -1, aux); }
} // namespace

Var operator+(Var a, Var b) { return binary(Op::add, a, b); }
Var operator-(Var a, Var b) { return binary(Op::sub, a, b); }
Var operator*(Var a, Var b) { return binary(Op::mul, a, b); }
Var operator/(Var a, Var b) { return binary(Op::div, a, b); }
Var operator-(Var a) { return unary(Op::neg, a); }
Var operator+(Var a, double c) { return a + a.tape->constant(c); }
Var operator+(double c, Var a) { return a + c; }
Var operator-(Var a, double c) { return a + (-c); }
Var operator-(double c, Var a) { return a.tape->constant(c) - a; }
Var operator*(Var a, double c) { return unary(Op::scale, a, c); }
Var operator*(double c, Var a) { return a * c; }
Var operator/(Var a, double c) { return a * (1.0 / c); }

Var sin(Var a) { return unary(Op::sin, a); }
Var cos(Var a) { return unary(Op::cos, a); }
Var tanh(Var a) { return unary(Op::tanh, a); }
Var exp(Var a) { return unary(Op::exp, a); }
Var log(Var a) { return unary(Op::log, a); }
Var sqrt(Var a) { return unary(Op::sqrt, a); }
Var relu(Var a) { return unary(Op::relu, a); }
Var elu_neg(Var a) { return unary(Op::elu_neg, a); }
Var sigmoid(Var a) { return unary(Op::sigmoid, a); }
Var softplus(Var a) { return unary(Op::softplus, a); }
Var powi(Var a, int n) { return unary(Op::powi, a, static_cast<double>(n)); }
Var step(Var a) { return unary(Op::step, a); }
Var exp_neg(Var a) { return unary(Op::exp_neg, a); }

} // namespace kronnet::ad
