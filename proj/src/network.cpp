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

#include "kronnet/network.hpp"

#include "kronnet/rng.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kronnet {

std::size_t FlatParams::trainable_count() const {
    std::size_t n = 0;
    for (std::uint8_t t : trainable) n += t;
    return n;
}

FlatParams flatten(const KnnModel& model) {
    FlatParams fp;
    fp.theta.reserve(param_count(model));
    for (const KnnLayer& l : model.layers) {
        for (double w : l.W) {
            fp.theta.push_back(w);
            fp.kind.push_back(ParamKind::weight);
            fp.trainable.push_back(l.w_trainable);
        }
        for (double b : l.b) {
            fp.theta.push_back(b);
            fp.kind.push_back(ParamKind::bias);
            fp.trainable.push_back(l.b_trainable);
        }
    }
    for (const KnnLayer& l : model.layers) {
        if (l.adaptive.size() == 0) continue;
        for (int k = 0; k < l.adaptive.size(); ++k) {
            fp.theta.push_back(l.adaptive.alpha[static_cast<std::size_t>(k)]);
            fp.kind.push_back(ParamKind::alpha);
            fp.trainable.push_back(l.adaptive.alpha_trainable[static_cast<std::size_t>(k)]);
        }
        for (int k = 0; k < l.adaptive.size(); ++k) {
            fp.theta.push_back(l.adaptive.omega[static_cast<std::size_t>(k)]);
            fp.kind.push_back(ParamKind::omega);
            fp.trainable.push_back(l.adaptive.omega_trainable[static_cast<std::size_t>(k)]);
        }
    }
    return fp;
}

void unflatten(KnnModel& model, std::span<const double> theta) {
    if (theta.size() != param_count(model))
        throw std::invalid_argument("unflatten: size mismatch");
    std::size_t p = 0;
    for (KnnLayer& l : model.layers) {
        for (double& w : l.W) w = theta[p++];
        for (double& b : l.b) b = theta[p++];
    }
    for (KnnLayer& l : model.layers) {
        if (l.adaptive.size() == 0) continue;
        for (double& a : l.adaptive.alpha) a = theta[p++];
        for (double& w : l.adaptive.omega) w = theta[p++];
    }
}

std::size_t param_count(const KnnModel& model) {
    std::size_t n = 0;
    for (const KnnLayer& l : model.layers)
        n += l.W.size() + l.b.size() + l.adaptive.alpha.size() + l.adaptive.omega.size();
    return n;
}

std::size_t ffn_param_count(std::span<const int> widths) {
    std::size_t n = 0;
    for (std::size_t l = 1; l < widths.size(); ++l) {
        n += static_cast<std::size_t>(widths[l]) * widths[l - 1] + widths[l];
    }
    return n;
}

FlatLayout flat_layout(const KnnModel& model) {
    FlatLayout fl;
    std::size_t p = 0;
    for (const KnnLayer& l : model.layers) {
        fl.w_off.push_back(p);
        p += l.W.size();
        fl.b_off.push_back(p);
        p += l.b.size();
    }
    for (const KnnLayer& l : model.layers) {
        fl.a_off.push_back(p);
        p += l.adaptive.alpha.size();
        fl.o_off.push_back(p);
        p += l.adaptive.omega.size();
    }
    fl.total = p;
    return fl;
}

std::vector<double> forward(const KnnModel& model, std::span<const double> x) {
    if (static_cast<int>(x.size()) != model.input_dim())
        throw std::invalid_argument("forward: input width mismatch");
    std::vector<double> z(x.begin(), x.end());
    std::vector<double> s;
    const int D = model.depth();
    for (int l = 0; l < D; ++l) {
        const KnnLayer& layer = model.layers[static_cast<std::size_t>(l)];
        s.assign(static_cast<std::size_t>(layer.out), 0.0);
        for (int i = 0; i < layer.out; ++i) {
            double acc = layer.b[static_cast<std::size_t>(i)];
            const double* row = layer.W.data() + static_cast<std::size_t>(i) * layer.in;
            for (int j = 0; j < layer.in; ++j) acc += row[j] * z[static_cast<std::size_t>(j)];
            s[static_cast<std::size_t>(i)] = acc;
        }
        if (l < D - 1) {
            for (double& v : s) v = adaptive_eval(model.family, layer.adaptive, v);
        }
        z.swap(s);
    }
    return z;
}

std::vector<double> forward_block(const KnnModel& model, std::span<const double> x,
                                  int width_cap) {
    if (static_cast<int>(x.size()) != model.input_dim())
        throw std::invalid_argument("forward_block: input width mismatch");
    const int D = model.depth();
    const int K = model.terms();
    for (const KnnLayer& l : model.layers) {
        if (static_cast<long>(K) * l.out > width_cap)
            throw std::length_error("forward_block: K*width exceeds the configured cap");
    }

    // Single-block input; block k of layer l carries omega^l_k * L_l(.),
    // and alpha of the producing activation scales the next matrix.
    std::vector<double> z(x.begin(), x.end());
    int z_blocks = 1; // number of K-blocks in z (1 before the first layer)
    std::vector<double> next;
    double slot_out[4];
    for (int l = 0; l < D; ++l) {
        const KnnLayer& layer = model.layers[static_cast<std::size_t>(l)];
        const bool last = l == D - 1;
        const int out_blocks = last ? 1 : K;
        const std::vector<double>* omega = last ? nullptr : &layer.adaptive.omega;
        // alpha weights of the previous activation; all-ones surrogate at l=0
        const std::vector<double>* alpha =
            l == 0 ? nullptr : &model.layers[static_cast<std::size_t>(l - 1)].adaptive.alpha;

        next.assign(static_cast<std::size_t>(out_blocks) * layer.out, 0.0);
        std::vector<double> wtilde(static_cast<std::size_t>(out_blocks) * layer.out *
                                   z_blocks * layer.in);
        // Materialize the scaled block matrix (omega (x) alpha) (x) W.
        for (int kb = 0; kb < out_blocks; ++kb) {
            const double wk = last ? 1.0 : (*omega)[static_cast<std::size_t>(kb)];
            for (int jb = 0; jb < z_blocks; ++jb) {
                const double aj = alpha ? (*alpha)[static_cast<std::size_t>(jb)] : 1.0;
                for (int i = 0; i < layer.out; ++i) {
                    for (int j = 0; j < layer.in; ++j) {
                        const std::size_t row = static_cast<std::size_t>(kb) * layer.out + i;
                        const std::size_t col = static_cast<std::size_t>(jb) * layer.in + j;
                        wtilde[row * (static_cast<std::size_t>(z_blocks) * layer.in) + col] =
                            wk * aj * layer.W[static_cast<std::size_t>(i) * layer.in + j];
                    }
                }
            }
        }
        const std::size_t cols = static_cast<std::size_t>(z_blocks) * layer.in;
        for (std::size_t r = 0; r < next.size(); ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < cols; ++c) acc += wtilde[r * cols + c] * z[c];
            next[r] = acc;
        }
        // block bias omega (x) b (plain b on the output layer)
        for (int kb = 0; kb < out_blocks; ++kb) {
            const double wk = last ? 1.0 : (*omega)[static_cast<std::size_t>(kb)];
            for (int i = 0; i < layer.out; ++i)
                next[static_cast<std::size_t>(kb) * layer.out + i] +=
                    wk * layer.b[static_cast<std::size_t>(i)];
        }
        if (!last) {
            // block activation: slot k applied to block k
            for (int kb = 0; kb < out_blocks; ++kb) {
                const Slot& slot = model.family.slots[static_cast<std::size_t>(kb)];
                for (int i = 0; i < layer.out; ++i) {
                    double& v = next[static_cast<std::size_t>(kb) * layer.out + i];
                    slot.eval(v, 0, slot_out);
                    v = slot_out[0];
                }
            }
        }
        z.swap(next);
        z_blocks = out_blocks;
    }
    return z;
}

ad::Var TapeModel::w(int layer, int i, int j) const {
    std::size_t off = 0;
    for (int l = 0; l < layer; ++l)
        off += model->layers[static_cast<std::size_t>(l)].W.size() +
               model->layers[static_cast<std::size_t>(l)].b.size();
    const KnnLayer& L = model->layers[static_cast<std::size_t>(layer)];
    return theta[off + static_cast<std::size_t>(i) * L.in + j];
}

ad::Var TapeModel::b(int layer, int i) const {
    std::size_t off = 0;
    for (int l = 0; l < layer; ++l)
        off += model->layers[static_cast<std::size_t>(l)].W.size() +
               model->layers[static_cast<std::size_t>(l)].b.size();
    const KnnLayer& L = model->layers[static_cast<std::size_t>(layer)];
    return theta[off + L.W.size() + static_cast<std::size_t>(i)];
}

std::span<const ad::Var> TapeModel::alpha(int layer) const {
    std::size_t off = 0;
    for (const KnnLayer& l : model->layers) off += l.W.size() + l.b.size();
    for (int l = 0; l < layer; ++l)
        off += model->layers[static_cast<std::size_t>(l)].adaptive.alpha.size() +
               model->layers[static_cast<std::size_t>(l)].adaptive.omega.size();
    const std::size_t k = model->layers[static_cast<std::size_t>(layer)].adaptive.alpha.size();
    return {theta.data() + off, k};
}

std::span<const ad::Var> TapeModel::omega(int layer) const {
    std::size_t off = 0;
    for (const KnnLayer& l : model->layers) off += l.W.size() + l.b.size();
    for (int l = 0; l < layer; ++l)
        off += model->layers[static_cast<std::size_t>(l)].adaptive.alpha.size() +
               model->layers[static_cast<std::size_t>(l)].adaptive.omega.size();
    const KnnLayer& L = model->layers[static_cast<std::size_t>(layer)];
    return {theta.data() + off + L.adaptive.alpha.size(), L.adaptive.omega.size()};
}

TapeModel bind_model(ad::Tape& tape, const KnnModel& model) {
    TapeModel tm;
    tm.model = &model;
    tm.tape = &tape;
    const std::size_t n = param_count(model);
    tm.theta.reserve(n);
    for (std::size_t i = 0; i < n; ++i) tm.theta.push_back(tape.input());
    return tm;
}

std::vector<ad::Var> forward_tape(const TapeModel& tm, std::span<const double> x) {
    const KnnModel& m = *tm.model;
    if (static_cast<int>(x.size()) != m.input_dim())
        throw std::invalid_argument("forward_tape: input width mismatch");
    ad::Tape& tp = *tm.tape;
    std::vector<ad::Var> z;
    z.reserve(x.size());
    for (double v : x) z.push_back(tp.constant(v));
    const int D = m.depth();
    for (int l = 0; l < D; ++l) {
        const KnnLayer& layer = m.layers[static_cast<std::size_t>(l)];
        std::vector<ad::Var> s;
        s.reserve(static_cast<std::size_t>(layer.out));
        for (int i = 0; i < layer.out; ++i) {
            ad::Var acc = tm.b(l, i);
            for (int j = 0; j < layer.in; ++j)
                acc = acc + tm.w(l, i, j) * z[static_cast<std::size_t>(j)];
            s.push_back(acc);
        }
        if (l < D - 1) {
            auto alpha = tm.alpha(l);
            auto omega = tm.omega(l);
            for (ad::Var& v : s) v = adaptive_apply(m.family, alpha, omega, v);
        }
        z.swap(s);
    }
    return z;
}

std::vector<ad::Jet2> jet_forward(const TapeModel& tm, std::span<const double> x, int coord) {
    const KnnModel& m = *tm.model;
    if (static_cast<int>(x.size()) != m.input_dim())
        throw std::invalid_argument("jet_forward: input width mismatch");
    if (coord < 0 || coord >= m.input_dim())
        throw std::invalid_argument("jet_forward: coordinate index out of range");
    ad::Tape& tp = *tm.tape;
    ad::Var zero = tp.constant(0.0);
    ad::Var one = tp.constant(1.0);
    std::vector<ad::Jet2> z;
    z.reserve(x.size());
    for (std::size_t j = 0; j < x.size(); ++j)
        z.push_back(ad::Jet2{tp.constant(x[j]), static_cast<int>(j) == coord ? one : zero, zero});
    const int D = m.depth();
    for (int l = 0; l < D; ++l) {
        const KnnLayer& layer = m.layers[static_cast<std::size_t>(l)];
        std::vector<ad::Jet2> s;
        s.reserve(static_cast<std::size_t>(layer.out));
        for (int i = 0; i < layer.out; ++i) {
            // affine maps propagate d1/d2 linearly (zero curvature)
            ad::Jet2 acc{tm.b(l, i), zero, zero};
            for (int j = 0; j < layer.in; ++j) {
                ad::Var w = tm.w(l, i, j);
                acc.v = acc.v + w * z[static_cast<std::size_t>(j)].v;
                acc.d1 = acc.d1 + w * z[static_cast<std::size_t>(j)].d1;
                acc.d2 = acc.d2 + w * z[static_cast<std::size_t>(j)].d2;
            }
            s.push_back(acc);
        }
        if (l < D - 1) {
            auto alpha = tm.alpha(l);
            auto omega = tm.omega(l);
            for (ad::Jet2& v : s) v = adaptive_apply_jet(m.family, alpha, omega, v);
        }
        z.swap(s);
    }
    return z;
}

const char* init_scheme_name(InitScheme s) {
    switch (s) {
    case InitScheme::theory: return "theory";
    case InitScheme::theorem32: return "theorem32";
    case InitScheme::practice: return "practice";
    }
    return "?";
}

InitScheme init_scheme_from_name(const std::string& name) {
    for (InitScheme s : {InitScheme::theory, InitScheme::theorem32, InitScheme::practice})
        if (name == init_scheme_name(s)) return s;
    throw std::invalid_argument("unknown init scheme '" + name + "'");
}

KnnModel init_model(std::span<const int> widths, const SchemeSpec& scheme, InitScheme init,
                    std::uint64_t seed, const InitOptions& opts) {
    if (widths.size() < 2) throw std::invalid_argument("init_model: need at least two widths");
    for (int w : widths)
        if (w <= 0) throw std::invalid_argument("init_model: widths must be positive");

    KnnModel model;
    const FamilyInit fi = make_special_case(scheme);
    model.family = fi.family;
    model.scheme = scheme;

    const int D = static_cast<int>(widths.size()) - 1;
    Rng rng(seed);
    for (int l = 0; l < D; ++l) {
        KnnLayer layer;
        layer.in = widths[static_cast<std::size_t>(l)];
        layer.out = widths[static_cast<std::size_t>(l) + 1];
        layer.W.resize(static_cast<std::size_t>(layer.out) * layer.in);
        layer.b.assign(static_cast<std::size_t>(layer.out), 0.0);
        if (l < D - 1) layer.adaptive = fi.params;
        model.layers.push_back(std::move(layer));
    }

    switch (init) {
    case InitScheme::theory: {
        if (D != 2)
            throw std::invalid_argument("init_model: theory scheme is defined for two layers");
        // v_i = [w_i; b_i] ~ N(0, I_{d+1}), c_i symmetric around 0
        KnnLayer& h = model.layers[0];
        for (int i = 0; i < h.out; ++i) {
            for (int j = 0; j < h.in; ++j) h.W[static_cast<std::size_t>(i) * h.in + j] = rng.normal();
            h.b[static_cast<std::size_t>(i)] = rng.normal();
        }
        KnnLayer& o = model.layers[1];
        for (double& c : o.W) c = rng.normal();
        o.b.assign(o.b.size(), 0.0);
        o.b_trainable = 0;
        break;
    }
    case InitScheme::theorem32: {
        if (D != 2)
            throw std::invalid_argument("init_model: theorem32 scheme is defined for two layers");
        for (const Slot& s : model.family.slots) {
            const bool odd = s.base == Act::tanh || s.base == Act::sin ||
                             s.base == Act::identity ||
                             (s.base == Act::poly && s.power % 2 == 1);
            if (!odd)
                throw std::invalid_argument(
                    "init_model: theorem32 needs zero-mean activations (odd phi_k)");
        }
        KnnLayer& h = model.layers[0];
        for (int i = 0; i < h.out; ++i) {
            for (int j = 0; j < h.in; ++j) h.W[static_cast<std::size_t>(i) * h.in + j] = rng.normal();
            h.b[static_cast<std::size_t>(i)] = rng.normal();
        }
        KnnLayer& o = model.layers[1];
        const int K = model.terms();
        const int N = h.out;
        const double c0 = opts.y_norm / (static_cast<double>(K) * N * std::sqrt(opts.data_m));
        for (double& c : o.W) {
            const double xi = opts.xi_01 ? static_cast<double>(rng.bernoulli01()) : rng.rademacher();
            c = c0 * xi;
        }
        o.w_trainable = 0; // c fixed
        o.b.assign(o.b.size(), 0.0);
        o.b_trainable = 0;
        // train only {v_i} and alpha: omega frozen at 1, alpha_k = 1/K
        AdaptiveParams& ap = model.layers[0].adaptive;
        ap.alpha.assign(static_cast<std::size_t>(K), 1.0 / K);
        ap.alpha_trainable.assign(static_cast<std::size_t>(K), 1);
        ap.omega.assign(static_cast<std::size_t>(K), 1.0);
        ap.omega_trainable.assign(static_cast<std::size_t>(K), 0);
        break;
    }
    case InitScheme::practice: {
        for (int l = 0; l < D; ++l) {
            KnnLayer& layer = model.layers[static_cast<std::size_t>(l)];
            const double std =
                opts.weight_std_fixed ? opts.weight_std : 1.0 / std::sqrt(double(layer.in));
            for (double& w : layer.W) w = rng.normal() * std;
        }
        break;
    }
    }
    return model;
}

void save_checkpoint(std::ostream& os, const KnnModel& model, std::uint64_t seed) {
    os << "kronnet-checkpoint v1\n";
    os << "widths =";
    os << " " << model.input_dim();
    for (const KnnLayer& l : model.layers) os << " " << l.out;
    os << "\n";
    os << "scheme = " << model.scheme.name() << "\n";
    os << "base = " << act_name(model.scheme.base) << "\n";
    os << "scale = " << model.scheme.scale << "\n";
    os << "harmonic = " << (model.scheme.cosine ? "cos" : "sin") << "\n";
    os << "literal_omega_init = " << (model.scheme.literal_omega_init ? 1 : 0) << "\n";
    os << "seed = " << seed << "\n";
    os << "layer_flags =";
    for (const KnnLayer& l : model.layers)
        os << " " << int(l.w_trainable) << int(l.b_trainable);
    os << "\n";
    const FlatParams fp = flatten(model);
    os << "count = " << fp.size() << "\n";
    char buf[64];
    for (std::size_t i = 0; i < fp.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%la", fp.theta[i]);
        os << buf << " " << int(fp.trainable[i]) << "\n";
    }
}

KnnModel load_checkpoint(std::istream& is, std::uint64_t* seed_out) {
    std::string line;
    if (!std::getline(is, line) || line != "kronnet-checkpoint v1")
        throw std::runtime_error("checkpoint: bad magic/version");
    auto expect_kv = [&](const std::string& key) -> std::string {
        if (!std::getline(is, line)) throw std::runtime_error("checkpoint: truncated");
        const std::string prefix = key + " = ";
        if (line.rfind(key + " =", 0) != 0)
            throw std::runtime_error("checkpoint: expected key '" + key + "'");
        return line.substr(std::min(prefix.size(), line.size()));
    };
    std::istringstream widths_ss(expect_kv("widths"));
    std::vector<int> widths;
    for (int w; widths_ss >> w;) widths.push_back(w);
    SchemeSpec spec = parse_scheme(expect_kv("scheme"));
    spec.base = act_from_name(expect_kv("base"));
    spec.scale = std::stod(expect_kv("scale"));
    spec.cosine = expect_kv("harmonic") == "cos";
    spec.literal_omega_init = expect_kv("literal_omega_init") == "1";
    const std::uint64_t seed = std::stoull(expect_kv("seed"));
    if (seed_out) *seed_out = seed;
    const std::string flags = expect_kv("layer_flags");

    KnnModel model = init_model(widths, spec, InitScheme::practice, seed);
    std::istringstream fss(flags);
    for (KnnLayer& l : model.layers) {
        std::string f;
        if (!(fss >> f) || f.size() != 2) throw std::runtime_error("checkpoint: bad layer_flags");
        l.w_trainable = f[0] == '1';
        l.b_trainable = f[1] == '1';
    }
    const std::size_t count = std::stoull(expect_kv("count"));
    if (count != param_count(model)) throw std::runtime_error("checkpoint: count mismatch");
    std::vector<double> theta(count);
    std::vector<std::uint8_t> trainable(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(is, line)) throw std::runtime_error("checkpoint: truncated payload");
        double v = 0.0;
        int t = 1;
        if (std::sscanf(line.c_str(), "%la %d", &v, &t) != 2)
            throw std::runtime_error("checkpoint: bad payload line");
        theta[i] = v;
        trainable[i] = static_cast<std::uint8_t>(t);
    }
    unflatten(model, theta);
    // restore adaptive masks from the stored trainable column
    FlatParams fp = flatten(model);
    std::size_t p = 0;
    for (KnnLayer& l : model.layers) p += l.W.size() + l.b.size();
    for (KnnLayer& l : model.layers) {
        for (std::uint8_t& t : l.adaptive.alpha_trainable) t = trainable[p++];
        for (std::uint8_t& t : l.adaptive.omega_trainable) t = trainable[p++];
    }
    (void)fp;
    return model;
}

void save_checkpoint_file(const std::string& path, const KnnModel& model, std::uint64_t seed) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open checkpoint file '" + path + "'");
    save_checkpoint(os, model, seed);
}

KnnModel load_checkpoint_file(const std::string& path, std::uint64_t* seed_out) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open checkpoint file '" + path + "'");
    return load_checkpoint(is, seed_out);
}

} // namespace kronnet
