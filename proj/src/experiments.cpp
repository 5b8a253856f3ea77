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

#include "kronnet/experiments.hpp"

#include "kronnet/data.hpp"
#include "kronnet/linalg.hpp"
#include "kronnet/rng.hpp"
#include "kronnet/theory.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace kronnet::exp {

namespace {

namespace fs = std::filesystem;

SchemeSpec scheme_from_config(const cfg::Config& c, const std::string& scheme_key) {
    SchemeSpec spec = parse_scheme(scheme_key);
    spec.base = act_from_name(c.get_str("model.base"));
    spec.scale = c.get_num("model.scale");
    spec.cosine = c.get_str("model.harmonic") == "cos";
    spec.literal_omega_init = c.get_flag("model.literal_omega_init");
    if (spec.kind == SchemeKind::fixed || spec.kind == SchemeKind::ffn) spec.scale = 1.0;
    return spec;
}

train::Schedule parse_schedule(const cfg::Config& c) {
    train::Schedule sched;
    const std::string text = c.get_str("schedule.phases", "");
    if (text.empty()) return sched;
    std::istringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto colon = tok.find(':');
        const auto dash = tok.find('-', colon);
        if (colon == std::string::npos || dash == std::string::npos)
            throw cfg::ConfigError("schedule.phases: expected scheme:start-end, got '" + tok + "'");
        train::Phase ph;
        ph.scheme = scheme_from_config(c, tok.substr(0, colon));
        ph.start = std::stol(tok.substr(colon + 1, dash - colon - 1));
        const std::string end = tok.substr(dash + 1);
        ph.end = end.empty() ? -1 : std::stol(end);
        sched.phases.push_back(ph);
    }
    return sched;
}

struct DataBundle {
    train::TrainData train_data;
    train::MetricFn metric;
    std::string metric_name = "none";
};

DataBundle make_bundle(const cfg::Config& c, std::uint64_t seed) {
    DataBundle bundle;
    const std::string task = c.get_str("data.task");
    if (task == "discontinuous" || task == "highfreq" || task == "csv") {
        data::RegressionTask rt;
        if (task == "csv") {
            const data::CsvData csv = data::import_csv(c.get_str("data.csv"));
            if (csv.dim != 1) throw cfg::ConfigError("data.csv: regression import expects 1-d x");
            bundle.train_data.X = csv.X;
            bundle.train_data.Y = csv.y;
            bundle.train_data.n = csv.n;
            bundle.metric = nullptr;
            return bundle;
        }
        rt = data::make_regression_task(task, task == "highfreq"
                                                  ? static_cast<int>(c.get_int("data.freq_m"))
                                                  : 1);
        bundle.train_data.X = rt.train_x();
        bundle.train_data.Y = rt.train_y();
        bundle.train_data.n = rt.n_train;
        auto ex = std::make_shared<std::vector<double>>(rt.eval_x());
        auto ey = std::make_shared<std::vector<double>>(rt.eval_y());
        bundle.metric = [ex, ey](const KnnModel& m) {
            std::vector<double> u(ex->size());
            kern::forward_batch(m, *ex, ex->size(), u);
            return data::relative_l2_error(u, *ey);
        };
        bundle.metric_name = "rel_l2";
    } else if (task.rfind("helmholtz-", 0) == 0) {
        const data::HelmholtzProblem problem = data::make_helmholtz(task.substr(10));
        const int nr = static_cast<int>(c.get_int("data.n_residual"));
        const int nb = static_cast<int>(c.get_int("data.n_boundary"));
        const data::Collocation col = data::sample_collocation(nr, nb, seed);
        bundle.train_data.Xres = col.interior;
        bundle.train_data.Xbnd = col.boundary;
        bundle.train_data.n_res = nr;
        bundle.train_data.n_bnd = nb;
        bundle.train_data.Fres.resize(static_cast<std::size_t>(nr));
        for (int i = 0; i < nr; ++i)
            bundle.train_data.Fres[static_cast<std::size_t>(i)] =
                problem.forcing(col.interior[2 * static_cast<std::size_t>(i)],
                                col.interior[2 * static_cast<std::size_t>(i) + 1]);
        // evaluation grid 101 x 101
        const int G = 101;
        auto gx = std::make_shared<std::vector<double>>();
        auto gu = std::make_shared<std::vector<double>>();
        gx->reserve(static_cast<std::size_t>(G) * G * 2);
        gu->reserve(static_cast<std::size_t>(G) * G);
        for (int i = 0; i < G; ++i) {
            for (int j = 0; j < G; ++j) {
                const double x = -1.0 + 2.0 * i / (G - 1);
                const double y = -1.0 + 2.0 * j / (G - 1);
                gx->push_back(x);
                gx->push_back(y);
                gu->push_back(problem.exact(x, y));
            }
        }
        bundle.metric = [gx, gu](const KnnModel& m) {
            std::vector<double> u(gu->size());
            kern::forward_batch(m, *gx, u.size(), u);
            return data::relative_l2_error(u, *gu);
        };
        bundle.metric_name = "rel_l2";
    } else if (task == "two-moons" || task == "two-circles") {
        const int n_train = static_cast<int>(c.get_int("data.n_train"));
        const int n_test = static_cast<int>(c.get_int("data.n_test"));
        const double noise = c.get_num("data.noise");
        auto generate = [&](int n, std::uint64_t s) {
            return task == "two-moons"
                       ? data::make_two_moons(n, noise, s)
                       : data::make_two_circles(n, noise, c.get_num("data.factor"), s);
        };
        const data::ToyClassificationSet tr = generate(n_train, seed);
        // disjoint stream for the test split
        auto te = std::make_shared<data::ToyClassificationSet>(
            generate(n_test, seed ^ 0x7e57da7aULL));
        bundle.train_data.X = tr.X;
        bundle.train_data.Y = tr.y;
        bundle.train_data.n = tr.n;
        bundle.metric = [te](const KnnModel& m) {
            std::vector<double> logits(static_cast<std::size_t>(te->n));
            kern::forward_batch(m, te->X, logits.size(), logits);
            return data::accuracy(logits, te->y);
        };
        bundle.metric_name = "test_accuracy";
    } else {
        throw cfg::ConfigError("unknown data.task '" + task + "'");
    }
    return bundle;
}

train::OptimizerSpec optimizer_from_config(const cfg::Config& c, int n_train) {
    train::OptimizerSpec opt;
    opt.kind = train::opt_from_name(c.get_str("optimizer.kind"));
    opt.lr = c.get_num("optimizer.lr");
    opt.momentum = c.get_num("optimizer.momentum");
    opt.weight_decay = c.get_num("optimizer.weight_decay");
    opt.batch = static_cast<int>(c.get_int("optimizer.batch"));
    opt.iterations = c.get_int("optimizer.iterations");
    if (opt.iterations <= 0) {
        if (!c.has("data.epochs"))
            throw cfg::ConfigError("optimizer.iterations is 0 and data.epochs is unset");
        const long epochs = c.get_int("data.epochs");
        const int b = opt.batch > 0 ? opt.batch : n_train;
        const long per_epoch = (n_train + b - 1) / b;
        opt.iterations = epochs * per_epoch;
    }
    return opt;
}

} // namespace

const RunSummaryRow& ExperimentResult::row(const std::string& scheme, std::uint64_t seed) const {
    for (const RunSummaryRow& r : rows)
        if (r.scheme == scheme && r.seed == seed) return r;
    throw std::out_of_range("no summary row for " + scheme + " seed " + std::to_string(seed));
}

cfg::Config resolve_experiment(const std::string& name, const Overrides& overrides,
                               const std::string& seeds_csv, const std::string& outdir) {
    cfg::Config c = cfg::default_experiment_config(name);
    for (const auto& [k, v] : overrides) {
        if (!c.has(k)) throw cfg::ConfigError("override targets unknown key '" + k + "'");
        c.set(k, v);
    }
    if (!seeds_csv.empty()) c.set("experiment.seeds", seeds_csv);
    if (!outdir.empty()) c.set("experiment.out", outdir);
    return c;
}

ExperimentResult run_experiment(const std::string& name, const Overrides& overrides,
                                const std::string& seeds_csv, const std::string& outdir) {
    ExperimentResult result;
    result.resolved = resolve_experiment(name, overrides, seeds_csv, outdir);
    const cfg::Config& c = result.resolved;
    result.outdir = c.get_str("experiment.out");
    fs::create_directories(result.outdir);

    const std::vector<std::uint64_t> seeds = c.get_seed_list("experiment.seeds");
    const std::vector<std::string> schemes = c.get_str_list("experiment.schemes");
    const std::vector<int> widths = c.get_int_list("model.widths");
    const InitScheme init = init_scheme_from_name(c.get_str("model.init"));
    InitOptions init_opts;
    init_opts.weight_std_fixed = c.get_flag("model.weight_std_fixed");
    init_opts.weight_std = c.get_num("model.weight_std");

    train::LossSpec loss;
    loss.kind = train::loss_from_name(c.get_str("loss.kind"));
    loss.w_residual = c.get_num("loss.w_residual");
    loss.w_boundary = c.get_num("loss.w_boundary");
    loss.k = c.get_num("loss.k");

    const train::Schedule schedule = parse_schedule(c);
    const double threshold = c.get_num("run.loss_threshold");
    const std::string backend_name = c.get_str("run.backend");
    if (backend_name != "fused" && backend_name != "tape")
        throw cfg::ConfigError("run.backend must be fused or tape");

    std::ostringstream hash_ss;
    hash_ss << std::hex << c.hash();
    const std::string hash = hash_ss.str();

    {
        std::ofstream manifest(result.outdir + "/manifest.txt");
        manifest << "# kronnet " << cfg::kVersion << " run manifest\n";
        manifest << "# config_hash = " << hash << "\n";
        manifest << "# iteration budgets, eval grids and toy-set noise levels are\n";
        manifest << "# artifact defaults where the source setting is unstated\n";
        manifest << c.print();
    }

    for (const std::string& scheme_key : schemes) {
        for (std::uint64_t seed : seeds) {
            const SchemeSpec spec = scheme_from_config(c, scheme_key);
            KnnModel model = init_model(widths, spec, init, seed, init_opts);
            DataBundle bundle = make_bundle(c, seed);
            train::OptimizerSpec opt = optimizer_from_config(c, bundle.train_data.n);

            train::TrainOptions topt;
            topt.backend =
                backend_name == "tape" ? kern::Backend::tape : kern::Backend::fused;
            topt.record_every = static_cast<int>(c.get_int("run.record_every"));
            topt.eval_every = static_cast<int>(c.get_int("run.eval_every"));
            topt.metric = bundle.metric;
            topt.transition_zero = c.get_flag("run.transition_zero");
            topt.checkpoint_every = c.get_int("run.checkpoint_every");
            if (topt.checkpoint_every > 0)
                topt.checkpoint_path = result.outdir + "/" + scheme_key + "-seed" +
                                       std::to_string(seed) + ".ckpt";
            topt.checkpoint_seed = seed;

            train::Schedule run_schedule;
            if (!schedule.phases.empty() &&
                schedule.phases.front().scheme.name() == scheme_key)
                run_schedule = schedule;

            train::RunRecord rec =
                train::train(model, bundle.train_data, opt, loss, run_schedule, seed, topt);

            const std::string run_path =
                result.outdir + "/" + scheme_key + "-seed" + std::to_string(seed) + ".csv";
            std::vector<std::string> comments = {
                "kronnet " + std::string(cfg::kVersion),
                "manifest_hash = " + hash,
                "experiment = " + name,
                "scheme = " + scheme_key,
                "seed = " + std::to_string(seed),
                "metric = " + bundle.metric_name,
                "adam = beta1 " + std::to_string(rec.beta1) + " beta2 " +
                    std::to_string(rec.beta2) + " eps " + std::to_string(rec.eps),
            };
            if (rec.early_stop) comments.push_back("early_stop = " + rec.stop_reason);
            train::write_run_csv(run_path, rec, comments);
            save_checkpoint_file(result.outdir + "/" + scheme_key + "-seed" +
                                     std::to_string(seed) + ".final.ckpt",
                                 model, seed);

            RunSummaryRow row;
            row.scheme = scheme_key;
            row.seed = seed;
            row.final_loss = rec.final_loss();
            row.final_metric = rec.final_metric();
            row.iters_to_threshold = rec.iters_to_threshold(threshold);
            row.wall_ms = rec.wall_ms.empty() ? 0.0 : rec.wall_ms.back();
            row.early_stop = rec.early_stop;
            result.rows.push_back(row);

            if (rec.early_stop)
                throw NumericError("run " + scheme_key + " seed " + std::to_string(seed) +
                                   ": " + rec.stop_reason);
        }
    }

    // normalized wall time, fixed scheme = 1 by definition
    std::map<std::string, double> mean_wall;
    for (const std::string& s : schemes) {
        double acc = 0.0;
        int n = 0;
        for (const RunSummaryRow& r : result.rows)
            if (r.scheme == s) {
                acc += r.wall_ms;
                ++n;
            }
        mean_wall[s] = n ? acc / n : 0.0;
    }
    const std::string baseline =
        mean_wall.count("fixed") && mean_wall["fixed"] > 0.0 ? "fixed" : schemes.front();
    for (RunSummaryRow& r : result.rows)
        r.normalized_time =
            mean_wall[baseline] > 0.0 ? mean_wall[r.scheme] / mean_wall[baseline] : 1.0;

    std::ofstream summary(result.outdir + "/summary.csv");
    summary << "# manifest_hash = " << hash << "\n";
    summary << "scheme,seed,final_loss,final_metric,iters_to_threshold,wall_ms,normalized_time\n";
    summary.precision(17);
    for (const RunSummaryRow& r : result.rows)
        summary << r.scheme << "," << r.seed << "," << r.final_loss << "," << r.final_metric
                << "," << r.iters_to_threshold << "," << r.wall_ms << "," << r.normalized_time
                << "\n";
    return result;
}

namespace {

void write_theory_csv(const std::string& path, const TheoryResult& result) {
    if (path.empty()) return;
    if (const fs::path dir = fs::path(path).parent_path(); !dir.empty())
        fs::create_directories(dir);
    std::ofstream os(path);
    os << "seed,quantity,lhs,rhs,pass\n";
    os.precision(17);
    for (const TheoryRow& r : result.rows)
        os << r.seed << "," << r.quantity << "," << r.lhs << "," << r.rhs << ","
           << (r.pass ? 1 : 0) << "\n";
}

double get_override(const Overrides& ov, const std::string& key, double fallback) {
    for (const auto& [k, v] : ov)
        if (k == key) return std::stod(v);
    return fallback;
}

} // namespace

std::vector<std::string> known_theory_checks() {
    return {"early-dominance", "matrices-fd", "dldt-identity", "lambda0", "cond-k", "appendix-b"};
}

TheoryResult run_theory(const std::string& check, int seeds, const std::string& out_csv,
                        const Overrides& overrides) {
    using namespace kronnet::theory;
    TheoryResult result;
    result.check = check;
    result.ok = true;
    auto row = [&](const std::string& seed, const std::string& q, double lhs, double rhs,
                   bool pass) {
        result.rows.push_back(TheoryRow{seed, q, lhs, rhs, pass});
        return pass;
    };

    auto trig_family = [](int K, double n) {
        SchemeSpec spec = parse_scheme("rowdy" + std::to_string(K));
        spec.base = Act::tanh;
        spec.scale = n;
        return make_special_case(spec).family;
    };

    if (check == "matrices-fd") {
        const int N = static_cast<int>(get_override(overrides, "N", 4));
        const int K = static_cast<int>(get_override(overrides, "K", 4));
        const int m = static_cast<int>(get_override(overrides, "m", 3));
        const int d = static_cast<int>(get_override(overrides, "d", 2));
        for (int s = 0; s < seeds; ++s) {
            Rng rng(static_cast<std::uint64_t>(s) + 1);
            TwoLayerModel model = init_two_layer(N, d, trig_family(K, 1.0), rng.next_u64());
            for (double& a : model.alpha) a = rng.uniform(-1.0, 1.0);
            for (double& w : model.omega) w = rng.uniform(0.3, 1.5);
            TheoryData data = make_theory_data(m, d, rng.next_u64());
            TheoryMatrices mats = build_matrices(model, data);
            std::vector<double> theta = flatten_theta(model);
            double worst = 0.0;
            for (int r = 0; r < mats.rows(); ++r) {
                for (int j = 0; j < m; ++j) {
                    auto u_of = [&](double v) {
                        std::vector<double> th = theta;
                        th[static_cast<std::size_t>(r)] = v;
                        TwoLayerModel mm = model;
                        unflatten_theta(mm, th);
                        return mm.u(std::span<const double>(data.X).subspan(
                            static_cast<std::size_t>(j) * (d + 1),
                            static_cast<std::size_t>(d + 1)));
                    };
                    const double h = 1e-5;
                    const double fd = (u_of(theta[static_cast<std::size_t>(r)] + h) -
                                       u_of(theta[static_cast<std::size_t>(r)] - h)) /
                                      (2.0 * h);
                    const double got = mats.M[static_cast<std::size_t>(r) * m + j];
                    worst = std::max(worst,
                                     std::abs(got - fd) / std::max(std::abs(fd), 1e-10));
                }
            }
            result.ok &= row(std::to_string(s), "max_rel_err_M_vs_fd", worst, 1e-6, worst < 1e-6);
        }
    } else if (check == "dldt-identity") {
        const int N = static_cast<int>(get_override(overrides, "N", 6));
        const int K = static_cast<int>(get_override(overrides, "K", 4));
        const int m = static_cast<int>(get_override(overrides, "m", 3));
        const int d = static_cast<int>(get_override(overrides, "d", 2));
        for (int s = 0; s < seeds; ++s) {
            Rng rng(static_cast<std::uint64_t>(s) + 11);
            TwoLayerModel model = init_two_layer(N, d, trig_family(K, 1.0), rng.next_u64());
            TheoryData data = make_theory_data(m, d, rng.next_u64());
            // probe both at init and mid-flow
            euler_flow(model, data, Regime::knn_all, 1e-3, 25);
            const DldtProbe probe = dldt_probe(model, data, Regime::knn_all);
            const double err =
                std::abs(probe.numeric - probe.analytic) / std::max(std::abs(probe.analytic), 1e-14);
            result.ok &= row(std::to_string(s), "dldt_rel_err", err, 1e-3, err < 1e-3);
        }
    } else if (check == "lambda0") {
        const int N = static_cast<int>(get_override(overrides, "N", 8));
        const int K = static_cast<int>(get_override(overrides, "K", 6));
        const int m = static_cast<int>(get_override(overrides, "m", 4));
        const int d = static_cast<int>(get_override(overrides, "d", 2));
        if (m > K)
            throw cfg::ConfigError("lambda0 check: m > K violates the K >= m assumption");
        for (int s = 0; s < seeds; ++s) {
            TwoLayerModel model =
                init_two_layer(N, d, trig_family(K, 1.0), static_cast<std::uint64_t>(s));
            TheoryData data = make_theory_data(m, d, static_cast<std::uint64_t>(s) + 9001);
            const double l0 = psi_sigma_min(model, data).lambda0;
            result.ok &= row(std::to_string(s), "lambda0", l0, 1e-10, l0 > 1e-10);
        }
        // duplicated data point: exact rank deficiency
        TwoLayerModel model = init_two_layer(N, d, trig_family(K, 1.0), 123);
        TheoryData data = make_theory_data(m, d, 456);
        for (int r = 0; r <= d; ++r)
            data.X[static_cast<std::size_t>(d + 1) + r] = data.X[static_cast<std::size_t>(r)];
        const double l0 = psi_sigma_min(model, data).lambda0;
        result.ok &= row("dup", "lambda0_duplicate_point", l0, 1e-12, l0 < 1e-12);
    } else if (check == "early-dominance") {
        const int N = static_cast<int>(get_override(overrides, "N", 16));
        const int K = static_cast<int>(get_override(overrides, "K", 5));
        const int m = static_cast<int>(get_override(overrides, "m", 4));
        const int d = static_cast<int>(get_override(overrides, "d", 2));
        const int steps = static_cast<int>(get_override(overrides, "steps", 100));
        int hits = 0;
        for (int s = 0; s < seeds; ++s) {
            EarlyDominanceResult r = early_dominance_experiment(
                N, K, m, d, trig_family(K, 1.0), static_cast<std::uint64_t>(s), steps);
            row(std::to_string(s), "loss0_equal", r.loss0_knn, r.loss0_ffn,
                r.loss0_knn == r.loss0_ffn);
            result.ok &= result.rows.back().pass;
            row(std::to_string(s), "rate_gap_a", r.rate_gap_a, 0.0, r.rate_gap_a > 0.0);
            result.ok &= result.rows.back().pass;
            const bool dominated = r.window_steps >= steps;
            row(std::to_string(s), "window_steps", r.window_steps, steps, dominated);
            hits += dominated;
        }
        const double frac = static_cast<double>(hits) / seeds;
        result.ok &= row("all", "dominance_fraction", frac, 0.9, frac >= 0.9);
    } else if (check == "cond-k") {
        Theorem32Options opts;
        opts.N = static_cast<int>(get_override(overrides, "N", opts.N));
        opts.K = static_cast<int>(get_override(overrides, "K", opts.K));
        opts.m = static_cast<int>(get_override(overrides, "m", opts.m));
        opts.scale = get_override(overrides, "scale", opts.scale);
        opts.delta = get_override(overrides, "delta", opts.delta);
        int rate_hits = 0;
        bool cond_all = true, drift_all = true;
        for (int s = 0; s < seeds; ++s) {
            Theorem32Run r = theorem32_experiment(opts, static_cast<std::uint64_t>(s));
            cond_all &= row(std::to_string(s), "cond_k", r.condition.lhs, r.condition.rhs,
                            r.condition.holds);
            row(std::to_string(s), "rate_bound_ratio", r.worst_bound_ratio, 1.05,
                r.rate_bound_ok);
            rate_hits += r.rate_bound_ok;
            drift_all &=
                row(std::to_string(s), "drift_vs_sqrt_l0", r.max_drift, r.sqrt_l0, r.drift_ok);
        }
        const double frac = static_cast<double>(rate_hits) / seeds;
        row("all", "rate_bound_fraction", frac, 0.9, frac >= 0.9);
        result.ok = cond_all && drift_all && frac >= 0.9;
    } else if (check == "appendix-b") {
        // Lipschitz(phi_k) <= B needs n = 1 slots; the perturbation lemma is
        // checked along short frozen-(omega,c) flows at B = 1.
        const int N = static_cast<int>(get_override(overrides, "N", 8));
        const int K = static_cast<int>(get_override(overrides, "K", 6));
        const int m = static_cast<int>(get_override(overrides, "m", 4));
        const int d = static_cast<int>(get_override(overrides, "d", 2));
        const double delta = get_override(overrides, "delta", 0.5);
        int misfit_fail = 0;
        bool b1_all = true;
        double xnorm_sq_max = 0.0;
        for (int s = 0; s < seeds; ++s) {
            const ActivationFamily family = trig_family(K, 1.0);
            TheoryData data = make_theory_data(m, d, static_cast<std::uint64_t>(s) + 77,
                                               get_override(overrides, "y_scale", 0.3));
            Rng rng(static_cast<std::uint64_t>(s) + 1234);
            TwoLayerModel m0;
            m0.N = N;
            m0.d = d;
            m0.family = family;
            m0.V.resize(static_cast<std::size_t>(N) * (d + 1));
            for (double& v : m0.V) v = rng.normal();
            const double y_norm = la::norm2(data.y);
            const double c0 = y_norm / (static_cast<double>(K) * N * std::sqrt(double(m)));
            m0.c.resize(static_cast<std::size_t>(N));
            for (double& v : m0.c) v = c0 * rng.rademacher();
            m0.alpha.assign(static_cast<std::size_t>(K), 1.0 / K);
            m0.omega.assign(static_cast<std::size_t>(K), 1.0);

            TwoLayerModel mt = m0;
            euler_flow(mt, data, Regime::theorem32, 1e-2, 200);
            const AppendixBReport rep = appendix_b_bounds(mt, m0, data, delta);
            b1_all &= row(std::to_string(s), "b1_psi_shift", rep.psi_shift, rep.psi_shift_rhs,
                          rep.psi_shift_ok);
            row(std::to_string(s), "b3_misfit", rep.sqrt_2l0, rep.misfit_rhs, rep.misfit_ok);
            row(std::to_string(s), "b3_misfit_over_k", rep.sqrt_2l0, rep.misfit_rhs_k,
                rep.misfit_k_ok);
            misfit_fail += rep.misfit_ok ? 0 : 1;
            const std::size_t rows_m = static_cast<std::size_t>(m);
            std::vector<double> X(rows_m * static_cast<std::size_t>(d + 1));
            std::copy(data.X.begin(), data.X.end(), X.begin());
            xnorm_sq_max = std::max(
                xnorm_sq_max, std::pow(la::spectral_norm(X, m, d + 1), 2.0));
        }
        // failure frequency against the stated probability, Monte-Carlo margin 0.25
        const double fail_frac = static_cast<double>(misfit_fail) / seeds;
        const double bound = std::exp(-m * delta * delta / (2.0 * xnorm_sq_max)) + 0.25;
        const bool mc_ok = fail_frac <= bound;
        row("all", "b3_failure_fraction", fail_frac, bound, mc_ok);
        result.ok = b1_all && mc_ok;
    } else {
        throw cfg::ConfigError("unknown theory check '" + check + "'");
    }

    write_theory_csv(out_csv, result);
    return result;
}

} // namespace kronnet::exp
