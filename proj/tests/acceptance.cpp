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

// End-to-end acceptance suite. Each numbered check prints one PASS/FAIL line
// with its headline numbers and wall time; the process exits nonzero if any
// check fails. Run a subset by listing numbers on the command line.

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vgf/vgf.hpp"

using namespace vgf;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double now_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// ---------------------------------------------------------------- shared runs

// The digit corpus every image-domain check draws from: 8000 training
// images and a disjoint 2000-image test set, both fixed by seed.
const Dataset& train_corpus() {
    static const Dataset ds = [] {
        Rng rng(42);
        return synth_digits(8000, rng);
    }();
    return ds;
}

const Dataset& test_corpus() {
    static const Dataset ds = [] {
        Rng rng(999);
        return synth_digits(2000, rng);
    }();
    return ds;
}

TrainConfig vcd_base_config() {
    TrainConfig cfg;
    cfg.loop = LoopKind::vcd;
    cfg.k = 1;
    cfg.batch = 64;
    cfg.seed = 11;
    cfg.experts = 64;
    cfg.d_phi = 64;
    cfg.conv1 = 8;
    cfg.conv2 = 16;
    cfg.hidden = 64;
    cfg.bottleneck = 64;
    return cfg;
}

// Transition models are shared between the image checks; trained once per
// rho value on the 5000-image subset.
const VcdResult& vcd_run(double rho, std::size_t epochs) {
    static std::map<std::pair<double, std::size_t>, VcdResult> cache;
    auto key = std::make_pair(rho, epochs);
    auto it = cache.find(key);
    if (it == cache.end()) {
        TrainConfig cfg = vcd_base_config();
        cfg.rho = rho;
        cfg.epochs = epochs;
        cfg.lr = 0.5;  // pretraining budget: reach usable reconstructions quickly
        Dataset subset = slice(train_corpus(), 0, 5000);
        it = cache.emplace(key, train_vcd(cfg, subset)).first;
    }
    return it->second;
}

// ---------------------------------------------------------------- criterion 1

Outcome criterion_gradients() {
    double worst = 0.0;
    std::string where;
    auto track = [&](const GradCheckResult& r, const char* label) {
        if (r.max_rel_err > worst) {
            worst = r.max_rel_err;
            where = std::string(label) + ":" + r.worst;
        }
    };

    Rng rng(101);
    {
        Graph g({6});
        g.add(dense("fc1", 6, 8)).add(tanh_layer()).add(dense("fc2", 8, 5)).add(sigmoid_layer()).add(softmax());
        g.init(rng);
        track(check_graph_gradients(g, rng.uniform_tensor({3, 6}, -1.0, 1.0), rng.uniform_tensor({3, 5}, -1.0, 1.0)),
              "dense-stack");
    }
    {
        Graph g({2, 8, 8});
        g.add(conv2d("c1", 2, 3)).add(relu()).add(maxpool2()).add(flatten()).add(dense("fc", 48, 4));
        g.init(rng);
        track(check_graph_gradients(g, rng.uniform_tensor({3, 2, 8, 8}, 0.2, 1.2),
                                    rng.uniform_tensor({3, 4}, -1.0, 1.0)),
              "conv-pool");
    }
    {
        Graph g({3, 4, 4});
        g.add(conv_transpose2d("d1", 3, 2)).add(batchnorm("bn", 2)).add(tanh_layer());
        g.init(rng);
        track(check_graph_gradients(g, rng.uniform_tensor({2, 3, 4, 4}, -1.0, 1.0),
                                    rng.uniform_tensor({2, 2, 8, 8}, -1.0, 1.0)),
              "deconv-bn");
    }
    {
        Graph g({5});
        g.add(gaussian_noise(0.1)).add(dense("fc", 5, 4)).add(dropout(0.25)).add(tanh_layer()).add(reshape({2, 1, 2}));
        g.init(rng);
        track(check_graph_gradients(g, rng.uniform_tensor({3, 5}, -1.0, 1.0),
                                    rng.uniform_tensor({3, 2, 1, 2}, -1.0, 1.0)),
              "stochastic-reshape");
    }
    {
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
        GradCheckResult r;
        auto loss = [&](const Tensor& xin) {
            auto t = poe_forward(m, xin, Mode::train);
            double s = 0.0;
            for (std::size_t i = 0; i < 3; ++i) s += c[i] * t.energy[i];
            return s + ch * entropy_of_mean_activation(t.probs);
        };
        Tensor xv = x;
        check_against_central_diff([&] { return loss(xv); }, xv, dx, "input", r);
        for (auto& p : m.params()) check_against_central_diff([&] { return loss(x); }, *p.value, *p.grad, p.name, r);
        track(r, "poe-head");
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
        GradCheckResult r;
        auto loss = [&](const Tensor& xin) {
            auto t = gan_forward(m, xin, Mode::train);
            double s = 0.0;
            for (std::size_t i = 0; i < 3; ++i) s += c[i] * t.energy[i];
            return s;
        };
        Tensor xv = x;
        check_against_central_diff([&] { return loss(xv); }, xv, dx, "input", r);
        for (auto& p : m.params()) check_against_central_diff([&] { return loss(x); }, *p.value, *p.grad, p.name, r);
        track(r, "gan-head");
    }

    return {worst < 1e-4, fmt("max rel err %.3e at %s", worst, where.c_str())};
}

// ---------------------------------------------------------------- criterion 2

Outcome criterion_energy_bound() {
    Rng rng(202);
    std::size_t draws = 0;
    double min_e = 1e300, max_slack = -1e300;
    for (int model_i = 0; model_i < 20; ++model_i) {
        std::size_t in = 2 + rng.integer(5);
        std::size_t k = 1 + rng.integer(12);
        Graph phi({in});
        phi.add(dense("fc1", in, 8)).add(tanh_layer()).add(dense("fc2", 8, 6)).add(relu());
        Rng mrng(300 + static_cast<std::uint64_t>(model_i));
        phi.init(mrng);
        EnergyModel m(std::move(phi), k, mrng, 1.0 + 3.0 * rng.uniform());
        Tensor x = rng.uniform_tensor({500, in}, -6.0, 6.0);
        Tensor e = poe_energy(m, x);
        for (std::size_t i = 0; i < e.size(); ++i) {
            min_e = std::min(min_e, e[i]);
            max_slack = std::max(max_slack, e[i] - m.max_energy());
            ++draws;
        }
    }
    bool bounds_ok = draws == 10000 && min_e >= 0.0 && max_slack <= 1e-12;

    // every saturation pattern of K <= 3 experts reaches an energy minimum
    double worst_min = 0.0;
    for (std::size_t k = 1; k <= 3; ++k) {
        Rng prng(7);
        EnergyModel m(Graph({k}), k, prng);
        std::fill(m.w.raw().begin(), m.w.raw().end(), 0.0);
        for (std::size_t j = 0; j < k; ++j) m.w[j * k + j] = 1.0;
        std::fill(m.b.raw().begin(), m.b.raw().end(), 0.0);
        for (std::size_t pattern = 0; pattern < (1u << k); ++pattern) {
            Tensor x({1, k});
            for (std::size_t j = 0; j < k; ++j) x[j] = (pattern >> j) & 1 ? 20.0 : -20.0;
            worst_min = std::max(worst_min, poe_energy(m, x)[0]);
        }
    }
    bool minima_ok = worst_min < 1e-6;

    return {bounds_ok && minima_ok,
            fmt("%zu draws in [%.2e, K ln2 %+.2e]; worst saturation minimum %.2e", draws, min_e, max_slack, worst_min)};
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion_jensen() {
    auto grid = QuadratureGrid::line(-3.0, 3.0, 256);
    Rng rng(303);
    int holds = 0;
    const int toys = 100;
    for (int rep = 0; rep < toys; ++rep) {
        Graph phi({1, 1, 1});
        phi.add(flatten()).add(dense("fc1", 1, 8)).add(tanh_layer()).add(dense("fc2", 8, 6)).add(relu());
        Rng mrng(400 + static_cast<std::uint64_t>(rep));
        phi.init(mrng);
        EnergyModel m(std::move(phi), 4, mrng, 1.0 + 3.0 * rng.uniform());
        EnergyFn fn = poe_energy_fn(m);
        Tensor data = rng.uniform_tensor({20, 1}, -2.5, 2.5);
        double a = rng.uniform(-3.0, 0.0), b = rng.uniform(0.5, 3.0);
        Tensor q = rng.uniform_tensor({4000, 1}, a, b);
        BoundReport r = bound_value(fn, data, q, std::log(b - a), grid);
        if (r.bound <= r.exact_nll + 3.0 * r.mc_stderr) ++holds;
    }

    // discrete 8-state model with q equal to the model distribution itself
    std::vector<double> e = {0.1, 1.3, 0.7, 2.0, 0.4, 1.0, 0.05, 1.7};
    double z = 0.0;
    for (double v : e) z += std::exp(-v);
    std::vector<double> p(8);
    double entropy = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
        p[i] = std::exp(-e[i]) / z;
        entropy -= p[i] * std::log(p[i]);
    }
    Rng qrng(13);
    const std::size_t n = 100000;
    double q_term = 0.0;
    for (std::size_t i = 0; i < n; ++i) q_term += e[qrng.categorical(p)];
    q_term /= static_cast<double>(n);
    double data_term = 0.0;
    for (std::size_t i = 0; i < 500; ++i) data_term += e[qrng.categorical(p)];
    data_term /= 500.0;
    double gap = (data_term + std::log(z)) - (data_term - q_term + entropy);

    bool ok = holds == toys && std::abs(gap) < 1e-2;
    return {ok, fmt("bound held on %d/%d random toys; exact-q gap %.5f at 1e5 samples", holds, toys, gap)};
}

// ---------------------------------------------------------------- criterion 4

Outcome criterion_mode_coverage() {
    SynthSpec spec{SynthKind::ring_mixture, 8, 0.05, 4000};
    auto centers = synth_mode_centers(spec);

    TrainConfig base;
    base.batch = 64;
    base.epochs = 60;  // 3720 iterations, within the 20k budget
    base.experts = 16;
    base.d_phi = 32;
    base.hidden = 48;
    base.dz = 4;
    base.lr = 0.1;

    auto coverage_of = [&](DirectGenerator& gen) {
        Rng srng(99);
        Tensor z = sample_noise(10000, gen.dz, srng);
        Tensor xs = gen.net.forward(z, Mode::eval);
        return mode_coverage(xs.reshaped({10000, 2}), centers, 0.15).covered(0.02);
    };

    int vote_k1 = 0, vote_gan_le = 0, vote_k3_ge = 0;
    std::string per_seed;
    for (std::uint64_t seed = 11; seed <= 15; ++seed) {
        Rng drng(1);
        Dataset data = synth(spec, drng);

        TrainConfig cfg = base;
        cfg.seed = seed;
        cfg.loop = LoopKind::vgan;
        cfg.k = 1;
        auto v1 = train_vgan(cfg, data);
        std::size_t c1 = coverage_of(v1.gen);

        cfg.k = 3;
        auto v3 = train_vgan(cfg, data);
        std::size_t c3 = coverage_of(v3.gen);

        cfg.loop = LoopKind::gan;
        cfg.k = 1;
        auto g1 = train_gan_baseline(cfg, data);
        std::size_t cg = coverage_of(g1.gen);

        if (c1 >= 6) ++vote_k1;
        if (cg <= c1) ++vote_gan_le;
        if (c3 >= c1) ++vote_k3_ge;
        per_seed += fmt(" s%llu[v1=%zu v3=%zu gan=%zu]", static_cast<unsigned long long>(seed), c1, c3, cg);
    }

    bool ok = vote_k1 >= 3 && vote_gan_le >= 3 && vote_k3_ge >= 3;
    return {ok, fmt("votes of 5: k1>=6 modes %d, gan<=k1 %d, k3>=k1 %d;%s", vote_k1, vote_gan_le, vote_k3_ge,
                    per_seed.c_str())};
}

// ---------------------------------------------------------------- criterion 5

Outcome criterion_vcd_images() {
    // (a) reconstruction error strictly decreases over the first five epochs
    const VcdResult& run = vcd_run(0.01, 8);
    std::string recon;
    bool decreasing = !run.diverged;
    double prev = 1e300;
    for (std::size_t e = 1; e <= 5; ++e) {
        double r = run.log.epoch_mean_recon(e);
        recon += fmt(" %.4f", r);
        if (r >= prev) decreasing = false;
        prev = r;
    }

    // (b) rho = 0 negatives are exactly the reconstructions
    TrainConfig cfg0 = vcd_base_config();
    Rng rng0(cfg0.seed);
    Dataset subset = slice(train_corpus(), 0, 256);
    EnergyModel em(build_phi(cfg0, subset.sample_shape(), rng0), cfg0.experts, rng0, cfg0.head_scale);
    TransitionGenerator tg = build_transition_generator(cfg0, subset.sample_shape(), rng0);
    Adadelta opt(em.params(), cfg0.lr);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < 64; ++i) idx.push_back(i);
    EnergyStepStats s0 = vcd_energy_step(em, tg, gather(subset.images, idx), 0.0, rng0, opt);
    bool negatives_exact = s0.negatives.raw() == s0.reconstructions.raw();

    // (c) a 9-step chain from the trained operator stays in range and moves
    VcdResult& trained = const_cast<VcdResult&>(run);
    Rng crng(5);
    std::vector<std::size_t> start_idx;
    for (std::size_t i = 0; i < 10; ++i) start_idx.push_back(5000 + i);  // held-out images
    Tensor x0 = gather(train_corpus().images, start_idx);
    auto chain = simulate_chain(trained.gen, x0, 9, crng);
    bool in_range = true;
    double total_l2 = 0.0;
    int steps_counted = 0;
    const Tensor* prev_x = &x0;
    std::size_t pixels = x0.size() / 10;
    for (const auto& xt : chain) {
        for (std::size_t i = 0; i < xt.size(); ++i)
            if (xt[i] < 0.0 || xt[i] > 1.0) in_range = false;
        for (std::size_t i = 0; i < 10; ++i) {
            double s = 0.0;
            for (std::size_t q = 0; q < pixels; ++q) {
                double d = xt[i * pixels + q] - (*prev_x)[i * pixels + q];
                s += d * d;
            }
            total_l2 += std::sqrt(s);
            ++steps_counted;
        }
        prev_x = &xt;
    }
    double mean_step = total_l2 / steps_counted;
    bool moves = mean_step > 0.5;

    bool ok = decreasing && negatives_exact && in_range && moves;
    return {ok, fmt("recon epochs 1-5:%s (strictly decreasing %s); rho=0 negatives exact %s; chain in range %s, "
                    "mean step L2 %.2f",
                    recon.c_str(), decreasing ? "yes" : "NO", negatives_exact ? "yes" : "NO",
                    in_range ? "yes" : "NO", mean_step)};
}

// ---------------------------------------------------------------- criterion 6

Outcome criterion_semisup() {
    Dataset labeled = slice(train_corpus(), 0, 1000);
    Dataset val = slice(train_corpus(), 6000, 2000);
    const Dataset& test = test_corpus();

    const std::vector<double> rhos = {0.001, 0.01, 0.1};
    const double rho_destroy = 1.0;
    const std::size_t pretrain_epochs = 8;

    int vote_destroy = 0, vote_helps = 0;
    std::string detail;
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        SemisupConfig sc;
        sc.labeled = 1000;
        sc.epochs = 12;
        sc.batch = 50;
        sc.seed = seed;
        sc.conv1 = 8;
        sc.conv2 = 16;
        sc.fc = 64;

        double base = train_classifier(sc, labeled, val, test, nullptr).test_error;

        double best_aug = 1.0;
        for (double rho : rhos) {
            auto& pre = const_cast<VcdResult&>(vcd_run(rho, pretrain_epochs));
            double err = train_classifier(sc, labeled, val, test, transition_sampler(pre.gen)).test_error;
            best_aug = std::min(best_aug, err);
        }
        auto& destroy = const_cast<VcdResult&>(vcd_run(rho_destroy, pretrain_epochs));
        double err_destroy = train_classifier(sc, labeled, val, test, transition_sampler(destroy.gen)).test_error;

        if (err_destroy > base) ++vote_destroy;
        if (best_aug <= base + 0.002) ++vote_helps;
        detail += fmt(" s%llu[base %.3f best %.3f rho1 %.3f]", static_cast<unsigned long long>(seed), base, best_aug,
                      err_destroy);
    }

    bool ok = vote_destroy >= 2 && vote_helps >= 2;
    return {ok, fmt("votes of 3: rho=1 hurts %d, best rho within +0.2pp %d;%s", vote_destroy, vote_helps,
                    detail.c_str())};
}

// ---------------------------------------------------------------- criterion 7

Outcome criterion_determinism() {
    Dataset digits = slice(train_corpus(), 0, 128);

    auto fingerprint = [&](LoopKind loop) {
        TrainConfig cfg;
        cfg.loop = loop;
        cfg.batch = 32;
        cfg.epochs = 2;
        cfg.seed = 77;
        cfg.experts = 8;
        cfg.d_phi = 16;
        cfg.conv1 = 4;
        cfg.conv2 = 8;
        cfg.hidden = 32;
        cfg.dz = 8;
        cfg.bottleneck = 12;
        std::ostringstream os;
        auto dump_map = [&](const std::map<std::string, Tensor>& m) {
            for (auto& [name, t] : m) {
                os << name << ":";
                os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * 8));
            }
        };
        if (loop == LoopKind::vgan) {
            auto r = train_vgan(cfg, digits);
            dump_map(energy_tensors(r.energy));
            dump_map(generator_tensors(r.gen));
            r.log.write_csv("acc_det_log.csv");
        } else if (loop == LoopKind::vcd) {
            auto r = train_vcd(cfg, digits);
            dump_map(energy_tensors(r.energy));
            dump_map(transition_tensors(r.gen));
            r.log.write_csv("acc_det_log.csv");
        } else {
            auto r = train_gan_baseline(cfg, digits);
            dump_map(gan_tensors(r.disc));
            dump_map(generator_tensors(r.gen));
            r.log.write_csv("acc_det_log.csv");
        }
        std::ifstream is("acc_det_log.csv", std::ios::binary);
        std::stringstream ss;
        ss << is.rdbuf();
        os << ss.str();
        return os.str();
    };

    bool ok = true;
    std::string detail;
    for (LoopKind loop : {LoopKind::vgan, LoopKind::vcd, LoopKind::gan}) {
        bool same = fingerprint(loop) == fingerprint(loop);
        ok = ok && same;
        detail += fmt(" %s:%s", loop_kind_name(loop), same ? "bit-identical" : "MISMATCH");
    }
    std::remove("acc_det_log.csv");
    return {ok, detail};
}

// ---------------------------------------------------------------- criterion 8

Outcome criterion_formats() {
    // handcrafted idx fixture
    std::vector<unsigned char> img = {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2};
    for (unsigned char v : {0, 63, 127, 255, 10, 20, 30, 40}) img.push_back(v);
    {
        std::ofstream os("acc_fixture-idx3", std::ios::binary);
        os.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
    }
    Dataset ds = load_idx("acc_fixture-idx3");
    bool idx_ok = ds.images.shape() == std::vector<std::size_t>{2, 1, 2, 2} && ds.images[1] == 63.0 / 255.0 &&
                  ds.images[3] == 1.0 && ds.images[4] == 10.0 / 255.0;
    std::remove("acc_fixture-idx3");

    // checkpoint round trip, bit-exact
    Rng rng(808);
    std::map<std::string, Tensor> tensors;
    tensors["a.weight"] = rng.uniform_tensor({3, 4}, -2.0, 2.0);
    tensors["b"] = rng.uniform_tensor({7}, -1e9, 1e9);
    save_checkpoint("acc_rt.vgf", tensors);
    auto loaded = load_checkpoint("acc_rt.vgf");
    save_checkpoint("acc_rt2.vgf", loaded);
    auto bytes = [](const char* p) {
        std::ifstream is(p, std::ios::binary);
        std::stringstream ss;
        ss << is.rdbuf();
        return ss.str();
    };
    bool ckpt_ok = loaded.at("a.weight").raw() == tensors.at("a.weight").raw() &&
                   bytes("acc_rt.vgf") == bytes("acc_rt2.vgf");
    std::remove("acc_rt.vgf");
    std::remove("acc_rt2.vgf");

    // png grid dimensions
    Tensor imgs({7, 1, 9, 11});
    write_png_grid("acc_grid.png", imgs, 3, 4);
    PngInfo info = read_png_info("acc_grid.png");
    bool png_ok = info.width == 4 * 11 && info.height == 3 * 9 && info.bit_depth == 8 && info.color_type == 0;
    std::remove("acc_grid.png");

    return {idx_ok && ckpt_ok && png_ok,
            fmt("idx fixture %s; checkpoint bytes %s; grid %zux%zu %s", idx_ok ? "ok" : "BAD",
                ckpt_ok ? "identical" : "DIFFER", info.width, info.height, png_ok ? "ok" : "BAD")};
}

}  // namespace

int main(int argc, char** argv) {
    struct Entry {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Entry> entries = {
        {1, "gradient suite", criterion_gradients},
        {2, "energy bound and saturation minima", criterion_energy_bound},
        {3, "jensen bound vs quadrature nll", criterion_jensen},
        {4, "ring mode coverage ordering", criterion_mode_coverage},
        {5, "transition training on images", criterion_vcd_images},
        {6, "semi-supervised augmentation ordering", criterion_semisup},
        {7, "bit-identical reruns", criterion_determinism},
        {8, "file format fidelity", criterion_formats},
    };

    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& e : entries) {
        if (!selected.empty() && !selected.count(e.id)) continue;
        double t0 = now_s();
        Outcome o;
        try {
            o = e.run();
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        double dt = now_s() - t0;
        std::printf("criterion %d [%s] %s: %s (%.1f s)\n", e.id, o.pass ? "PASS" : "FAIL", e.name, o.detail.c_str(),
                    dt);
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
