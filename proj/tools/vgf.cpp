// ----------------------------------------------------------------------------
// Copyright 2026 The vgf authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ----------------------------------------------------------------------------

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include "vgf/vgf.hpp"

namespace fs = std::filesystem;
using namespace vgf;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitIo = 4;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<double> rho;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
    auto* c = cmd->add_option("--config", args.config_path, "path to a key=value config file");
    if (config_required) c->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "seed override");
    cmd->add_option("--rho", args.rho, "transition objective mix override");
}

Config load_config(const CommonArgs& args) {
    Config cfg = args.config_path.empty() ? Config() : Config::parse_file(args.config_path);
    if (args.seed) cfg.set("train.seed", std::to_string(*args.seed));
    if (args.rho) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", *args.rho);
        cfg.set("vcd.rho", buf);
    }
    return cfg;
}

Dataset dataset_from_config(Config& cfg) {
    std::string kind = cfg.get_str("data.kind", "digits");
    std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("data.seed", 1));
    if (kind == "idx") {
        std::string images = cfg.require_str("data.images");
        std::string labels = cfg.get_str("data.labels", "");
        return load_idx(images, labels);
    }
    if (kind == "ring" || kind == "grid") {
        SynthSpec spec;
        spec.kind = kind == "ring" ? SynthKind::ring_mixture : SynthKind::grid_mixture;
        spec.modes = static_cast<std::size_t>(cfg.get_int("data.modes", 8));
        spec.sigma = cfg.get_double("data.sigma", 0.05);
        spec.n = static_cast<std::size_t>(cfg.get_int("data.n", 4000));
        Rng rng(seed);
        return synth(spec, rng);
    }
    if (kind == "digits") {
        Rng rng(seed);
        return synth_digits(static_cast<std::size_t>(cfg.get_int("data.n", 8000)), rng);
    }
    throw ConfigError("data.kind must be idx, ring, grid or digits");
}

// Every key any subcommand defines. One config file can describe a whole
// experiment; each command reads its own sections and accepts the others.
const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "run.loop", "train.k", "train.batch", "train.epochs", "train.seed",
        "opt.lr", "opt.decay", "opt.eps",
        "model.K", "model.dphi", "model.conv1", "model.conv2", "model.hidden", "model.head_scale",
        "gen.dz", "gen.entropy", "gen.out",
        "vcd.rho", "vcd.d",
        "data.kind", "data.seed", "data.images", "data.labels", "data.test_images", "data.test_labels",
        "data.modes", "data.sigma", "data.n", "data.val_count", "data.test_n", "data.test_seed",
        "sample.checkpoint", "sample.rows", "sample.cols",
        "chain.checkpoint", "chain.count", "chain.steps",
        "bound.dims", "bound.lo", "bound.hi", "bound.points", "bound.samples", "bound.energy", "bound.checkpoint",
        "semisup.labeled", "semisup.epochs", "semisup.batch", "semisup.dropout", "semisup.noise",
        "semisup.conv1", "semisup.conv2", "semisup.fc", "semisup.hidden", "semisup.wclean", "semisup.waug",
        "semisup.transition",
    };
    return keys;
}

void finish_config(Config& cfg, const std::string& out_dir) {
    for (const auto& key : known_keys()) cfg.mark_consumed(key);
    cfg.ensure_all_consumed();
    cfg.write((fs::path(out_dir) / "config.resolved").string());
}

void write_log(const TrainLog& log, const std::string& out_dir) {
    log.write_csv((fs::path(out_dir) / "train_log.csv").string());
    log.write_timing_csv((fs::path(out_dir) / "timing.csv").string());
}

std::string ckpt_path(const std::string& out_dir, const std::string& name, std::size_t epoch = 0) {
    if (epoch == 0) return (fs::path(out_dir) / (name + ".vgf")).string();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_epoch_%03zu.vgf", name.c_str(), epoch);
    return (fs::path(out_dir) / buf).string();
}

int run_train(const CommonArgs& args, LoopKind loop) {
    Config cfg = load_config(args);
    Dataset data = dataset_from_config(cfg);
    TrainConfig tc = TrainConfig::from_config(cfg, loop);
    fs::create_directories(args.out_dir);
    finish_config(cfg, args.out_dir);

    bool diverged = false;
    if (tc.loop == LoopKind::vgan) {
        auto r = train_vgan(tc, data, [&](std::size_t epoch, VganResult& res) {
            save_checkpoint(ckpt_path(args.out_dir, "energy", epoch), energy_tensors(res.energy));
            save_checkpoint(ckpt_path(args.out_dir, "generator", epoch), generator_tensors(res.gen));
        });
        save_checkpoint(ckpt_path(args.out_dir, "energy"), energy_tensors(r.energy));
        save_checkpoint(ckpt_path(args.out_dir, "generator"), generator_tensors(r.gen));
        write_log(r.log, args.out_dir);
        diverged = r.diverged;
    } else if (tc.loop == LoopKind::vcd) {
        auto r = train_vcd(tc, data, [&](std::size_t epoch, VcdResult& res) {
            save_checkpoint(ckpt_path(args.out_dir, "energy", epoch), energy_tensors(res.energy));
            save_checkpoint(ckpt_path(args.out_dir, "transition", epoch), transition_tensors(res.gen));
        });
        save_checkpoint(ckpt_path(args.out_dir, "energy"), energy_tensors(r.energy));
        save_checkpoint(ckpt_path(args.out_dir, "transition"), transition_tensors(r.gen));
        write_log(r.log, args.out_dir);
        diverged = r.diverged;
    } else if (tc.loop == LoopKind::gan) {
        auto r = train_gan_baseline(tc, data, [&](std::size_t epoch, GanResult& res) {
            save_checkpoint(ckpt_path(args.out_dir, "discriminator", epoch), gan_tensors(res.disc));
            save_checkpoint(ckpt_path(args.out_dir, "generator", epoch), generator_tensors(res.gen));
        });
        save_checkpoint(ckpt_path(args.out_dir, "discriminator"), gan_tensors(r.disc));
        save_checkpoint(ckpt_path(args.out_dir, "generator"), generator_tensors(r.gen));
        write_log(r.log, args.out_dir);
        diverged = r.diverged;
    } else {
        throw ConfigError("unhandled training loop kind");
    }

    if (diverged) {
        std::fprintf(stderr, "vgf: training diverged; the last per-epoch checkpoint is the last good state\n");
        return kExitRuntime;
    }
    return 0;
}

int run_sample(const CommonArgs& args) {
    Config cfg = load_config(args);
    Dataset data = dataset_from_config(cfg);
    TrainConfig tc = TrainConfig::from_config(cfg, LoopKind::vgan);
    std::string ckpt = cfg.require_str("sample.checkpoint");
    std::size_t rows = static_cast<std::size_t>(cfg.get_int("sample.rows", 10));
    std::size_t cols = static_cast<std::size_t>(cfg.get_int("sample.cols", 10));
    fs::create_directories(args.out_dir);
    finish_config(cfg, args.out_dir);

    Rng build_rng(tc.seed);
    build_phi(tc, data.sample_shape(), build_rng);  // keep the build stream identical to training
    DirectGenerator gen = build_direct_generator(tc, data.sample_shape(), build_rng);
    load_generator_tensors(gen, load_checkpoint(ckpt));

    Rng rng(tc.seed + 1);
    Tensor z = sample_noise(rows * cols, gen.dz, rng);
    Tensor samples = gen.net.forward(z, Mode::eval);

    if (data.sample_size() == 2) {
        Dataset pts;
        pts.images = samples;
        write_points_csv(pts, (fs::path(args.out_dir) / "samples.csv").string());
        std::printf("wrote %s\n", (fs::path(args.out_dir) / "samples.csv").c_str());
    } else {
        std::string png = (fs::path(args.out_dir) / "samples.png").string();
        write_png_grid(png, samples, rows, cols);
        std::printf("wrote %s\n", png.c_str());
    }
    return 0;
}

int run_chain(const CommonArgs& args, std::size_t steps_flag) {
    Config cfg = load_config(args);
    Dataset data = dataset_from_config(cfg);
    TrainConfig tc = TrainConfig::from_config(cfg, LoopKind::vcd);
    std::string ckpt = cfg.require_str("chain.checkpoint");
    std::size_t count = static_cast<std::size_t>(cfg.get_int("chain.count", 10));
    std::size_t steps = steps_flag ? steps_flag : static_cast<std::size_t>(cfg.get_int("chain.steps", 9));
    fs::create_directories(args.out_dir);
    finish_config(cfg, args.out_dir);

    Rng build_rng(tc.seed);
    build_phi(tc, data.sample_shape(), build_rng);
    TransitionGenerator gen = build_transition_generator(tc, data.sample_shape(), build_rng);
    load_transition_tensors(gen, load_checkpoint(ckpt));

    std::vector<std::size_t> idx(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = i % data.count();
    Tensor x0 = gather(data.images, idx);

    Rng rng(tc.seed + 2);
    auto chain = simulate_chain(gen, x0, steps, rng);

    // grid: the starting row followed by one row per step
    std::vector<std::size_t> shape = x0.shape();
    shape[0] = count * (steps + 1);
    Tensor grid(shape);
    std::size_t per = x0.size();
    std::copy(x0.data(), x0.data() + per, grid.data());
    for (std::size_t t = 0; t < steps; ++t)
        std::copy(chain[t].data(), chain[t].data() + per, grid.data() + (t + 1) * per);

    std::string png = (fs::path(args.out_dir) / "chain.png").string();
    write_png_grid(png, grid, steps + 1, count);
    std::printf("wrote %s (%zu chains, %zu steps)\n", png.c_str(), count, steps);
    return 0;
}

int run_eval_bound(const CommonArgs& args) {
    Config cfg = load_config(args);
    std::size_t dims = static_cast<std::size_t>(cfg.get_int("bound.dims", 1));
    double lo = cfg.get_double("bound.lo", -3.0);
    double hi = cfg.get_double("bound.hi", 3.0);
    std::size_t points = static_cast<std::size_t>(cfg.get_int("bound.points", 256));
    std::size_t n_q = static_cast<std::size_t>(cfg.get_int("bound.samples", 20000));
    std::string energy_kind = cfg.get_str("bound.energy", "gaussian");
    std::string ckpt = cfg.get_str("bound.checkpoint", "");
    QuadratureGrid grid = dims == 1 ? QuadratureGrid::line(lo, hi, points) : QuadratureGrid::square(lo, hi, points);

    Dataset data = dataset_from_config(cfg);
    if (data.sample_size() != dims) throw ConfigError("bound.dims must match the dataset point width");

    TrainConfig tc = TrainConfig::from_config(cfg, LoopKind::vgan);
    EnergyFn fn;
    EnergyModel model;  // keep alive for the closure
    if (!ckpt.empty()) {
        Rng rng(tc.seed);
        model = EnergyModel(build_phi(tc, data.sample_shape(), rng), tc.experts, rng, tc.head_scale);
        load_energy_tensors(model, load_checkpoint(ckpt));
        fn = poe_energy_fn(model);
    } else if (energy_kind == "gaussian") {
        fn = [](const Tensor& pts) {
            std::size_t m = pts.dim(0), d = pts.size() / m;
            Tensor e({m});
            for (std::size_t i = 0; i < m; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < d; ++j) s += pts[i * d + j] * pts[i * d + j];
                e[i] = 0.5 * s;
            }
            return e;
        };
    } else {
        throw ConfigError("bound.energy must be gaussian, or set bound.checkpoint");
    }

    fs::create_directories(args.out_dir);
    finish_config(cfg, args.out_dir);

    // q = uniform over the grid box: easy to sample, entropy known exactly
    Rng rng(tc.seed + 3);
    Tensor q({n_q, dims});
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = rng.uniform(lo, hi);
    double q_entropy = static_cast<double>(dims) * std::log(hi - lo);

    Tensor pts = data.images.reshaped({data.count(), dims});
    BoundReport report = bound_value(fn, pts, q, q_entropy, grid);
    LogPartition lp = exact_log_partition(fn, grid);

    std::string path = (fs::path(args.out_dir) / "bound_report.csv").string();
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path);
    os << BoundReport::csv_header() << ",log_z,grid_converged\n";
    os << report.csv_row() << ',' << lp.value << ',' << (lp.converged() ? 1 : 0) << '\n';
    os.close();
    std::printf("bound %.6f  nll %.6f  gap %.6f  (3*mc_se %.6f)%s\n", report.bound, report.exact_nll, report.gap,
                3.0 * report.mc_stderr, lp.converged() ? "" : "  [grid too coarse]");
    return 0;
}

int run_augment_train(const CommonArgs& args) {
    Config cfg = load_config(args);
    Dataset train = dataset_from_config(cfg);
    if (!train.has_labels()) throw ConfigError("augment-train needs a labeled dataset");

    SemisupConfig sc = SemisupConfig::from_config(cfg);
    std::size_t val_count = static_cast<std::size_t>(cfg.get_int("data.val_count", 2000));
    if (val_count + sc.labeled > train.count()) throw ConfigError("data.val_count leaves no room for the labeled subset");

    Dataset test;
    if (cfg.has("data.test_images")) {
        test = load_idx(cfg.require_str("data.test_images"), cfg.get_str("data.test_labels", ""));
    } else {
        Rng trng(static_cast<std::uint64_t>(cfg.get_int("data.test_seed", 999)));
        test = synth_digits(static_cast<std::size_t>(cfg.get_int("data.test_n", 2000)), trng);
    }

    std::string transition_ckpt = cfg.get_str("semisup.transition", "");
    TrainConfig tc = TrainConfig::from_config(cfg, LoopKind::vcd);
    fs::create_directories(args.out_dir);
    finish_config(cfg, args.out_dir);

    Dataset labeled = slice(train, 0, sc.labeled);
    Dataset val = slice(train, train.count() - val_count, val_count);

    TransitionGenerator tg;
    AugSampler sampler;
    std::string model_name = "no-augmentation";
    if (!transition_ckpt.empty()) {
        Rng rng(tc.seed);
        build_phi(tc, train.sample_shape(), rng);
        tg = build_transition_generator(tc, train.sample_shape(), rng);
        load_transition_tensors(tg, load_checkpoint(transition_ckpt));
        sampler = transition_sampler(tg);
        char buf[48];
        std::snprintf(buf, sizeof buf, "vcd-augmented(rho=%g)", tc.rho);
        model_name = buf;
    }

    ClassifierResult r = train_classifier(sc, labeled, val, test, sampler);

    std::string path = (fs::path(args.out_dir) / "results.csv").string();
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path);
    os << "model,dataset,error\n";
    char row[160];
    std::snprintf(row, sizeof row, "%s,%s-%zu,%.4f\n", model_name.c_str(),
                  cfg.get_str("data.kind", "digits").c_str(), sc.labeled, r.test_error);
    os << row;
    os.close();

    std::map<std::string, Tensor> clf_tensors;
    for (auto& p : r.clf.params()) clf_tensors.emplace(p.name, *p.value);
    for (auto& p : r.clf.state()) clf_tensors.emplace(p.name, *p.value);
    save_checkpoint(ckpt_path(args.out_dir, "classifier"), clf_tensors);

    std::printf("%s: val %.4f (epoch %zu), test %.4f\n", model_name.c_str(), r.val_error, r.best_epoch, r.test_error);
    return 0;
}

// Finite-difference battery over every layer kind and both energy heads.
int run_grad_check() {
    double worst = 0.0;
    std::string where;

    auto track = [&](const GradCheckResult& r, const std::string& label) {
        if (r.max_rel_err > worst) {
            worst = r.max_rel_err;
            where = label + " " + r.worst;
        }
        std::printf("  %-28s max rel err %.3e\n", label.c_str(), r.max_rel_err);
    };

    Rng rng(101);
    {
        Graph g({6});
        g.add(dense("fc1", 6, 8)).add(tanh_layer()).add(dense("fc2", 8, 5)).add(sigmoid_layer()).add(softmax());
        g.init(rng);
        Tensor x = rng.uniform_tensor({3, 6}, -1.0, 1.0);
        Tensor c = rng.uniform_tensor({3, 5}, -1.0, 1.0);
        track(check_graph_gradients(g, x, c), "dense/tanh/sigmoid/softmax");
    }
    {
        Graph g({2, 8, 8});
        g.add(conv2d("c1", 2, 3)).add(relu()).add(maxpool2()).add(flatten()).add(dense("fc", 48, 4));
        g.init(rng);
        Tensor x = rng.uniform_tensor({2, 2, 8, 8}, 0.2, 1.2);
        Tensor c = rng.uniform_tensor({2, 4}, -1.0, 1.0);
        track(check_graph_gradients(g, x, c), "conv2d/maxpool");
    }
    {
        Graph g({3, 4, 4});
        g.add(conv_transpose2d("d1", 3, 2)).add(batchnorm("bn", 2)).add(tanh_layer());
        g.init(rng);
        Tensor x = rng.uniform_tensor({2, 3, 4, 4}, -1.0, 1.0);
        Tensor c = rng.uniform_tensor({2, 2, 8, 8}, -1.0, 1.0);
        track(check_graph_gradients(g, x, c), "conv_transpose2d/batchnorm");
    }
    {
        Graph g({5});
        g.add(gaussian_noise(0.1)).add(dense("fc", 5, 4)).add(dropout(0.25)).add(tanh_layer());
        g.init(rng);
        Tensor x = rng.uniform_tensor({3, 5}, -1.0, 1.0);
        Tensor c = rng.uniform_tensor({3, 4}, -1.0, 1.0);
        track(check_graph_gradients(g, x, c), "noise/dropout");
    }
    {
        // product-of-experts head with its batch entropy term
        Graph phi({4});
        phi.add(dense("fc1", 4, 6)).add(tanh_layer()).add(dense("fc2", 6, 5)).add(relu());
        phi.init(rng);
        EnergyModel m(std::move(phi), 3, rng);
        Tensor x = rng.uniform_tensor({3, 4}, -1.0, 1.0);
        Tensor c = rng.uniform_tensor({3}, -1.0, 1.0);
        const double ch = 0.6;
        m.zero_grads();
        auto tape = poe_forward(m, x, Mode::train);
        Tensor dx = poe_backward(m, tape, c, ch);
        GradCheckResult result;
        auto loss = [&](const Tensor& xin) {
            auto t = poe_forward(m, xin, Mode::train);
            double s = 0.0;
            for (std::size_t i = 0; i < 3; ++i) s += c[i] * t.energy[i];
            return s + ch * entropy_of_mean_activation(t.probs);
        };
        Tensor xv = x;
        check_against_central_diff([&] { return loss(xv); }, xv, dx, "input", result);
        for (auto& p : m.params()) check_against_central_diff([&] { return loss(x); }, *p.value, *p.grad, p.name, result);
        track(result, "poe-energy-head");
    }
    {
        Graph phi({4});
        phi.add(dense("fc1", 4, 5)).add(tanh_layer()).add(dense("fc2", 5, 4)).add(relu());
        phi.init(rng);
        GanModel m(std::move(phi), rng);
        Tensor x = rng.uniform_tensor({3, 4}, -1.0, 1.0);
        Tensor c = rng.uniform_tensor({3}, -1.0, 1.0);
        m.zero_grads();
        auto tape = gan_forward(m, x, Mode::train);
        Tensor d_logits({3});
        for (std::size_t i = 0; i < 3; ++i) d_logits[i] = c[i] * (stable_sigmoid(tape.logits[i]) - 1.0);
        Tensor dx = gan_backward(m, tape, d_logits);
        GradCheckResult result;
        auto loss = [&](const Tensor& xin) {
            auto t = gan_forward(m, xin, Mode::train);
            double s = 0.0;
            for (std::size_t i = 0; i < 3; ++i) s += c[i] * t.energy[i];
            return s;
        };
        Tensor xv = x;
        check_against_central_diff([&] { return loss(xv); }, xv, dx, "input", result);
        for (auto& p : m.params()) check_against_central_diff([&] { return loss(x); }, *p.value, *p.grad, p.name, result);
        track(result, "sigmoid-energy-head");
    }

    std::printf("max relative error: %.6e (%s)\n", worst, where.c_str());
    return worst < 1e-4 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"energy-based generative modeling: variational adversarial training, "
                 "transition-operator sampling, exact toy evaluation"};
    app.require_subcommand(1);

    CommonArgs targs, sargs, cargs, bargs, aargs;
    std::size_t chain_steps = 0;

    auto* train_vgan_cmd = app.add_subcommand("train-vgan", "train an energy model with a direct generator");
    add_common(train_vgan_cmd, targs);
    auto* train_vcd_cmd = app.add_subcommand("train-vcd", "train an energy model with a transition generator");
    add_common(train_vcd_cmd, targs);
    auto* train_gan_cmd = app.add_subcommand("train-gan", "train the adversarial baseline");
    add_common(train_gan_cmd, targs);

    auto* sample_cmd = app.add_subcommand("sample", "draw a sample grid from a generator checkpoint");
    add_common(sample_cmd, sargs);
    auto* chain_cmd = app.add_subcommand("chain", "iterate the transition operator from data points");
    add_common(chain_cmd, cargs);
    chain_cmd->add_option("--steps", chain_steps, "number of transition steps");

    auto* bound_cmd = app.add_subcommand("eval-bound", "evaluate the variational bound against the quadrature NLL");
    add_common(bound_cmd, bargs);
    auto* aug_cmd = app.add_subcommand("augment-train", "train a classifier, optionally with transition augmentation");
    add_common(aug_cmd, aargs);

    auto* grad_cmd = app.add_subcommand("grad-check", "finite-difference check of every layer and energy head");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_vgan_cmd->parsed()) return run_train(targs, LoopKind::vgan);
        if (train_vcd_cmd->parsed()) return run_train(targs, LoopKind::vcd);
        if (train_gan_cmd->parsed()) return run_train(targs, LoopKind::gan);
        if (sample_cmd->parsed()) return run_sample(sargs);
        if (chain_cmd->parsed()) return run_chain(cargs, chain_steps);
        if (bound_cmd->parsed()) return run_eval_bound(bargs);
        if (aug_cmd->parsed()) return run_augment_train(aargs);
        if (grad_cmd->parsed()) return run_grad_check();
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "vgf: config error: %s\n", e.what());
        return kExitConfig;
    } catch (const IoError& e) {
        std::fprintf(stderr, "vgf: io error: %s\n", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "vgf: error: %s\n", e.what());
        return kExitRuntime;
    }
    return 0;
}
