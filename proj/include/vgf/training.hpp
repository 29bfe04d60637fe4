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

#ifndef VGF_TRAINING_HPP
#define VGF_TRAINING_HPP

#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include "vgf/adadelta.hpp"
#include "vgf/errors.hpp"
#include "vgf/config.hpp"
#include "vgf/data.hpp"
#include "vgf/energy.hpp"
#include "vgf/generator.hpp"

namespace vgf {

enum class LoopKind { vgan, vcd, gan };

inline LoopKind parse_loop_kind(const std::string& s) {
    if (s == "vgan") return LoopKind::vgan;
    if (s == "vcd") return LoopKind::vcd;
    if (s == "gan") return LoopKind::gan;
    throw ConfigError("unknown training loop kind '" + s + "' (expected vgan, vcd or gan)");
}

inline const char* loop_kind_name(LoopKind k) {
    switch (k) {
        case LoopKind::vgan: return "vgan";
        case LoopKind::vcd: return "vcd";
        case LoopKind::gan: return "gan";
    }
    throw ConfigError("unknown training loop kind");
}

enum class OutAct { autodetect, linear, sigmoid };

/// Every knob of a training run. Architecture widths live here, not in code.
struct TrainConfig {
    LoopKind loop = LoopKind::vgan;
    std::size_t k = 1;       // generator steps per outer iteration
    std::size_t batch = 64;  // N
    std::size_t epochs = 10;
    std::uint64_t seed = 1;

    std::size_t experts = 100;  // K
    double head_scale = 4.0;    // expert read-out init widening
    double rho = 0.01;          // energy/reconstruction mix of the transition objective
    bool gen_entropy_term = true;

    double lr = 0.1;
    double adadelta_decay = 0.95;
    double adadelta_eps = 1e-6;

    std::size_t dz = 16;         // direct generator noise width
    std::size_t bottleneck = 64; // transition generator h width
    std::size_t d_phi = 64;      // feature width
    std::size_t conv1 = 8, conv2 = 16;
    std::size_t hidden = 64;     // dense width for flat data
    OutAct gen_out = OutAct::autodetect;

    void validate() const {
        if (k < 1) throw ConfigError("train.k must be >= 1");
        if (batch < 1) throw ConfigError("train.batch must be >= 1");
        if (rho < 0.0 || rho > 1.0) throw ConfigError("vcd.rho must be in [0,1]");
        if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    }

    static TrainConfig from_config(Config& cfg, LoopKind loop_kind) {
        TrainConfig t;
        t.loop = parse_loop_kind(cfg.get_str("run.loop", loop_kind_name(loop_kind)));
        t.k = static_cast<std::size_t>(cfg.get_int("train.k", 1));
        t.batch = static_cast<std::size_t>(cfg.get_int("train.batch", 64));
        t.epochs = static_cast<std::size_t>(cfg.get_int("train.epochs", 10));
        t.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", 1));
        t.experts = static_cast<std::size_t>(cfg.get_int("model.K", 100));
        t.head_scale = cfg.get_double("model.head_scale", 4.0);
        t.d_phi = static_cast<std::size_t>(cfg.get_int("model.dphi", 64));
        t.conv1 = static_cast<std::size_t>(cfg.get_int("model.conv1", 8));
        t.conv2 = static_cast<std::size_t>(cfg.get_int("model.conv2", 16));
        t.hidden = static_cast<std::size_t>(cfg.get_int("model.hidden", 64));
        t.lr = cfg.get_double("opt.lr", 0.1);
        t.adadelta_decay = cfg.get_double("opt.decay", 0.95);
        t.adadelta_eps = cfg.get_double("opt.eps", 1e-6);
        t.dz = static_cast<std::size_t>(cfg.get_int("gen.dz", 16));
        t.gen_entropy_term = cfg.get_bool("gen.entropy", true);
        std::string out = cfg.get_str("gen.out", "auto");
        if (out == "auto") t.gen_out = OutAct::autodetect;
        else if (out == "linear") t.gen_out = OutAct::linear;
        else if (out == "sigmoid") t.gen_out = OutAct::sigmoid;
        else throw ConfigError("gen.out must be auto, linear or sigmoid");
        t.rho = cfg.get_double("vcd.rho", 0.01);
        t.bottleneck = static_cast<std::size_t>(cfg.get_int("vcd.d", 64));
        t.validate();
        return t;
    }
};

namespace detail {

inline bool conv_friendly(const std::vector<std::size_t>& shape) {
    return shape.size() == 3 && shape[1] >= 8 && shape[2] >= 8 && shape[1] % 4 == 0 && shape[2] % 4 == 0;
}

inline std::size_t flat_size(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

}  // namespace detail

/// Feature network: two conv+pool stages and a dense layer on images, a
/// two-layer perceptron otherwise. Never contains batch normalization, so
/// real and generated batches see the identical function.
inline Graph build_phi(const TrainConfig& cfg, const std::vector<std::size_t>& sample_shape, Rng& rng) {
    Graph g(sample_shape);
    if (detail::conv_friendly(sample_shape)) {
        std::size_t c = sample_shape[0], h = sample_shape[1], w = sample_shape[2];
        g.add(conv2d("conv1", c, cfg.conv1)).add(relu()).add(maxpool2());
        g.add(conv2d("conv2", cfg.conv1, cfg.conv2)).add(relu()).add(maxpool2());
        g.add(flatten()).add(dense("fc1", cfg.conv2 * (h / 4) * (w / 4), cfg.d_phi)).add(relu());
    } else {
        g.add(flatten());
        g.add(dense("fc1", detail::flat_size(sample_shape), cfg.hidden)).add(relu());
        g.add(dense("fc2", cfg.hidden, cfg.d_phi)).add(relu());
    }
    g.init(rng);
    return g;
}

/// Noise-to-sample network; the only place batch normalization appears.
inline DirectGenerator build_direct_generator(const TrainConfig& cfg, const std::vector<std::size_t>& sample_shape,
                                              Rng& rng) {
    bool conv = detail::conv_friendly(sample_shape);
    bool sigmoid_out = cfg.gen_out == OutAct::sigmoid || (cfg.gen_out == OutAct::autodetect && conv);
    Graph g({cfg.dz});
    if (conv) {
        std::size_t c = sample_shape[0], h = sample_shape[1], w = sample_shape[2];
        std::size_t seed_spatial = cfg.conv2 * (h / 4) * (w / 4);
        g.add(dense("fc1", cfg.dz, cfg.hidden)).add(batchnorm("bn1", cfg.hidden)).add(relu());
        g.add(dense("fc2", cfg.hidden, seed_spatial)).add(batchnorm("bn2", seed_spatial)).add(relu());
        g.add(reshape({cfg.conv2, h / 4, w / 4}));
        g.add(conv_transpose2d("up1", cfg.conv2, cfg.conv1)).add(batchnorm("bn3", cfg.conv1)).add(relu());
        g.add(conv_transpose2d("up2", cfg.conv1, c));
    } else {
        g.add(dense("fc1", cfg.dz, cfg.hidden)).add(batchnorm("bn1", cfg.hidden)).add(relu());
        g.add(dense("fc2", cfg.hidden, cfg.hidden)).add(batchnorm("bn2", cfg.hidden)).add(relu());
        g.add(dense("fc3", cfg.hidden, detail::flat_size(sample_shape)));
        g.add(reshape(sample_shape));
    }
    if (sigmoid_out) g.add(sigmoid_layer());
    g.init(rng);
    return DirectGenerator(std::move(g), cfg.dz);
}

/// Encoder/decoder pair with a tanh bottleneck and sigmoid output.
inline TransitionGenerator build_transition_generator(const TrainConfig& cfg,
                                                      const std::vector<std::size_t>& sample_shape, Rng& rng) {
    bool conv = detail::conv_friendly(sample_shape);
    Graph enc(sample_shape);
    Graph dec({cfg.bottleneck});
    if (conv) {
        std::size_t c = sample_shape[0], h = sample_shape[1], w = sample_shape[2];
        std::size_t spatial = cfg.conv2 * (h / 4) * (w / 4);
        enc.add(conv2d("conv1", c, cfg.conv1)).add(relu()).add(maxpool2());
        enc.add(conv2d("conv2", cfg.conv1, cfg.conv2)).add(relu()).add(maxpool2());
        enc.add(flatten()).add(dense("fc1", spatial, cfg.bottleneck)).add(tanh_layer());
        dec.add(dense("fc1", cfg.bottleneck, spatial)).add(relu()).add(reshape({cfg.conv2, h / 4, w / 4}));
        dec.add(conv_transpose2d("up1", cfg.conv2, cfg.conv1)).add(relu());
        dec.add(conv_transpose2d("up2", cfg.conv1, c)).add(sigmoid_layer());
    } else {
        std::size_t d = detail::flat_size(sample_shape);
        enc.add(flatten()).add(dense("fc1", d, cfg.hidden)).add(relu());
        enc.add(dense("fc2", cfg.hidden, cfg.bottleneck)).add(tanh_layer());
        dec.add(dense("fc1", cfg.bottleneck, cfg.hidden)).add(relu());
        dec.add(dense("fc2", cfg.hidden, d)).add(sigmoid_layer()).add(reshape(sample_shape));
    }
    enc.init(rng);
    dec.init(rng);
    return TransitionGenerator(std::move(enc), std::move(dec), cfg.bottleneck);
}

struct TrainRecord {
    std::size_t iter = 0;
    std::size_t epoch = 0;
    double data_energy = 0.0;
    double gen_energy = 0.0;
    double entropy_gen = 0.0;
    double entropy_data = 0.0;
    std::vector<double> gen_losses;  // one per inner generator step
    double recon_mse = 0.0;
    double wall_ms = 0.0;  // emitted separately so the main log stays reproducible
};

struct TrainLog {
    std::vector<TrainRecord> records;

    void write_csv(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw IoError("cannot write train log to " + path);
        os << "iter,epoch,data_energy,gen_energy,entropy_gen,entropy_data,gen_losses,recon_mse\n";
        char buf[64];
        auto num = [&](double v) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return std::string(buf);
        };
        for (const auto& r : records) {
            os << r.iter << ',' << r.epoch << ',' << num(r.data_energy) << ',' << num(r.gen_energy) << ','
               << num(r.entropy_gen) << ',' << num(r.entropy_data) << ',';
            for (std::size_t i = 0; i < r.gen_losses.size(); ++i) os << (i ? ";" : "") << num(r.gen_losses[i]);
            os << ',' << num(r.recon_mse) << '\n';
        }
    }

    void write_timing_csv(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw IoError("cannot write timing log to " + path);
        os << "iter,wall_ms\n";
        for (const auto& r : records) os << r.iter << ',' << r.wall_ms << '\n';
    }

    double epoch_mean_recon(std::size_t epoch) const {
        double s = 0.0;
        std::size_t c = 0;
        for (const auto& r : records)
            if (r.epoch == epoch) {
                s += r.recon_mse;
                ++c;
            }
        return c ? s / static_cast<double>(c) : 0.0;
    }
};

struct GenStepStats {
    double loss = 0.0;       // descent value of the generator objective
    double entropy_gen = 0.0;
    double recon_mse = 0.0;
};

struct EnergyStepStats {
    double data_energy = 0.0;
    double gen_energy = 0.0;
    double entropy_data = 0.0;
    Tensor negatives;        // what the energy was pushed up on (vcd only)
    Tensor reconstructions;  // plain autoencoder output (vcd only)
};

/// Generator ascent objective -(1/N) sum E(G(z)) + H(batch), evaluated
/// without touching any state.
inline double vgan_generator_objective(EnergyModel& energy, DirectGenerator& gen, const Tensor& z,
                                       bool entropy_term) {
    Tape tape;
    Tensor xg = gen.net.forward(z, Mode::train_frozen, tape);
    PoeTape poe = poe_forward(energy, xg, Mode::train_frozen);
    double j = -mean(poe.energy);
    if (entropy_term) j += entropy_of_mean_activation(poe.probs);
    return j;
}

/// One ascent step of the generator with the energy held fixed. Only
/// generator parameters move.
inline GenStepStats vgan_generator_step(EnergyModel& energy, DirectGenerator& gen, const Tensor& z, Adadelta& opt,
                                        bool entropy_term) {
    gen.zero_grads();
    energy.zero_grads();
    std::size_t n = z.dim(0);
    Tape tape;
    Tensor xg = gen.net.forward(z, Mode::train, tape);
    PoeTape poe = poe_forward(energy, xg, Mode::train_frozen);
    GenStepStats stats;
    stats.entropy_gen = entropy_of_mean_activation(poe.probs);
    stats.loss = mean(poe.energy) - (entropy_term ? stats.entropy_gen : 0.0);
    Tensor d_energy = Tensor::full({n}, 1.0 / static_cast<double>(n));
    Tensor dxg = poe_backward(energy, poe, d_energy, entropy_term ? -1.0 : 0.0);
    gen.net.backward(dxg, tape);
    opt.step();
    return stats;
}

/// One descent step of the energy on  mean E(data) - mean E(G(z)) - H(data
/// batch); the generator is a frozen sampler here.
inline EnergyStepStats vgan_energy_step(EnergyModel& energy, DirectGenerator& gen, const Tensor& x, const Tensor& z,
                                        Adadelta& opt) {
    energy.zero_grads();
    gen.zero_grads();
    std::size_t n = x.dim(0);
    Tensor xg = gen.net.forward(z, Mode::train_frozen);
    PoeTape poe_data = poe_forward(energy, x, Mode::train);
    PoeTape poe_gen = poe_forward(energy, xg, Mode::train);
    EnergyStepStats stats;
    stats.data_energy = mean(poe_data.energy);
    stats.gen_energy = mean(poe_gen.energy);
    stats.entropy_data = entropy_of_mean_activation(poe_data.probs);
    double inv_n = 1.0 / static_cast<double>(n);
    poe_backward(energy, poe_data, Tensor::full({n}, inv_n), -1.0);
    poe_backward(energy, poe_gen, Tensor::full({z.dim(0)}, -1.0 / static_cast<double>(z.dim(0))), 0.0);
    opt.step();
    return stats;
}

/// Transition-generator step on the rho-mixed objective (optionally plus the
/// batch-entropy ascent term).
inline GenStepStats vcd_generator_step(EnergyModel& energy, TransitionGenerator& gen, const Tensor& x, double rho,
                                       bool entropy_term, Rng& rng, Adadelta& opt) {
    gen.zero_grads();
    energy.zero_grads();
    VcdParts parts = vcd_generator_forward(energy, gen, x, rho, entropy_term, rng, Mode::train);
    vcd_generator_backward(energy, gen, parts, x, rho, entropy_term);
    opt.step();
    GenStepStats stats;
    stats.loss = parts.loss;
    stats.entropy_gen = parts.gen_entropy;
    stats.recon_mse = parts.recon_mse;
    return stats;
}

/// Energy descent with negatives drawn from the transition distribution.
/// At rho = 0 the transition objective never sees the energy, so negatives
/// are the plain reconstructions (an autoencoder supplies the contrast).
inline EnergyStepStats vcd_energy_step(EnergyModel& energy, TransitionGenerator& gen, const Tensor& x, double rho,
                                       Rng& rng, Adadelta& opt) {
    energy.zero_grads();
    gen.zero_grads();
    std::size_t n = x.dim(0);
    TransitionSample s = transition_sample(gen, x, rng, Mode::train_frozen);
    EnergyStepStats stats;
    stats.negatives = rho == 0.0 ? s.xbar : s.xtilde;
    stats.reconstructions = s.xbar;
    PoeTape poe_data = poe_forward(energy, x, Mode::train);
    PoeTape poe_neg = poe_forward(energy, stats.negatives, Mode::train);
    stats.data_energy = mean(poe_data.energy);
    stats.gen_energy = mean(poe_neg.energy);
    stats.entropy_data = entropy_of_mean_activation(poe_data.probs);
    double inv_n = 1.0 / static_cast<double>(n);
    poe_backward(energy, poe_data, Tensor::full({n}, inv_n), -1.0);
    poe_backward(energy, poe_neg, Tensor::full({n}, -inv_n), 0.0);
    opt.step();
    return stats;
}

/// Discriminator loss of the adversarial baseline:
///   mean -log D(x) + mean -log(1 - D(G(z)))
inline EnergyStepStats gan_discriminator_step(GanModel& disc, DirectGenerator& gen, const Tensor& x, const Tensor& z,
                                              Adadelta& opt) {
    disc.zero_grads();
    gen.zero_grads();
    std::size_t n = x.dim(0), m = z.dim(0);
    Tensor xg = gen.net.forward(z, Mode::train_frozen);
    GanTape t_data = gan_forward(disc, x, Mode::train);
    GanTape t_fake = gan_forward(disc, xg, Mode::train);
    EnergyStepStats stats;
    stats.data_energy = mean(t_data.energy);
    stats.gen_energy = mean(t_fake.energy);
    Tensor d_data({n}), d_fake({m});
    for (std::size_t i = 0; i < n; ++i) d_data[i] = (stable_sigmoid(t_data.logits[i]) - 1.0) / static_cast<double>(n);
    for (std::size_t i = 0; i < m; ++i) d_fake[i] = stable_sigmoid(t_fake.logits[i]) / static_cast<double>(m);
    gan_backward(disc, t_data, d_data);
    gan_backward(disc, t_fake, d_fake);
    opt.step();
    return stats;
}

/// Non-saturating generator loss: mean -log D(G(z)).
inline GenStepStats gan_generator_step(GanModel& disc, DirectGenerator& gen, const Tensor& z, Adadelta& opt) {
    gen.zero_grads();
    disc.zero_grads();
    std::size_t n = z.dim(0);
    Tape tape;
    Tensor xg = gen.net.forward(z, Mode::train, tape);
    GanTape t = gan_forward(disc, xg, Mode::train_frozen);
    GenStepStats stats;
    stats.loss = mean(t.energy);
    Tensor d_logits({n});
    for (std::size_t i = 0; i < n; ++i) d_logits[i] = (stable_sigmoid(t.logits[i]) - 1.0) / static_cast<double>(n);
    Tensor dxg = gan_backward(disc, t, d_logits);
    gen.net.backward(dxg, tape);
    opt.step();
    return stats;
}

namespace detail {

inline std::vector<Tensor> snapshot(std::vector<ParamRef> params, std::vector<ParamRef> state) {
    std::vector<Tensor> out;
    for (auto& p : params) out.push_back(*p.value);
    for (auto& p : state) out.push_back(*p.value);
    return out;
}

inline void restore(std::vector<ParamRef> params, std::vector<ParamRef> state, const std::vector<Tensor>& snap) {
    std::size_t i = 0;
    for (auto& p : params) *p.value = snap[i++];
    for (auto& p : state) *p.value = snap[i++];
}

class StopWatch {
public:
    StopWatch() : start_(std::chrono::steady_clock::now()) {}
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

struct VganResult {
    EnergyModel energy;
    DirectGenerator gen;
    TrainLog log;
    bool diverged = false;
    std::size_t completed_epochs = 0;
};

struct VcdResult {
    EnergyModel energy;
    TransitionGenerator gen;
    TrainLog log;
    bool diverged = false;
    std::size_t completed_epochs = 0;
};

struct GanResult {
    GanModel disc;
    DirectGenerator gen;
    TrainLog log;
    bool diverged = false;
    std::size_t completed_epochs = 0;
};

// Loop skeleton shared by all three runners: k generator steps, one
// energy/discriminator step, one record per outer iteration, per-epoch
// snapshots for rollback when a pass turns non-finite.
namespace detail {

template <typename Result, typename IterBody>
void run_epochs(const TrainConfig& cfg, const Dataset& data, Result& result, Rng& rng,
                std::vector<ParamRef> all_params, std::vector<ParamRef> all_state, IterBody&& body,
                const std::function<void(std::size_t, Result&)>& per_epoch) {
    if (data.count() == 0) throw std::invalid_argument("training: empty dataset");
    auto snap = snapshot(all_params, all_state);
    std::size_t iter = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto batches = epoch_batches(data.count(), cfg.batch, rng);
        try {
            for (auto& batch_idx : batches) {
                StopWatch watch;
                TrainRecord r;
                r.iter = ++iter;
                r.epoch = epoch;
                body(batch_idx, r);
                r.wall_ms = watch.ms();
                result.log.records.push_back(std::move(r));
            }
        } catch (const std::runtime_error&) {
            restore(all_params, all_state, snap);
            result.diverged = true;
            return;
        }
        result.completed_epochs = epoch;
        snap = snapshot(all_params, all_state);
        if (per_epoch) per_epoch(epoch, result);
    }
}

}  // namespace detail

inline VganResult train_vgan(const TrainConfig& cfg, const Dataset& data,
                             const std::function<void(std::size_t, VganResult&)>& per_epoch = {}) {
    cfg.validate();
    Rng rng(cfg.seed);
    VganResult result;
    result.energy = EnergyModel(build_phi(cfg, data.sample_shape(), rng), cfg.experts, rng, cfg.head_scale);
    result.gen = build_direct_generator(cfg, data.sample_shape(), rng);
    Adadelta opt_e(result.energy.params(), cfg.lr, cfg.adadelta_decay, cfg.adadelta_eps);
    Adadelta opt_g(result.gen.params(), cfg.lr, cfg.adadelta_decay, cfg.adadelta_eps);

    auto all_params = result.energy.params();
    for (auto& p : result.gen.params()) all_params.push_back(p);
    auto all_state = result.energy.state();
    for (auto& p : result.gen.state()) all_state.push_back(p);

    detail::run_epochs(cfg, data, result, rng, all_params, all_state,
        [&](const std::vector<std::size_t>& batch_idx, TrainRecord& r) {
            for (std::size_t s = 0; s < cfg.k; ++s) {
                Tensor z = sample_noise(cfg.batch, cfg.dz, rng);
                GenStepStats gs = vgan_generator_step(result.energy, result.gen, z, opt_g, cfg.gen_entropy_term);
                r.gen_losses.push_back(gs.loss);
                r.entropy_gen = gs.entropy_gen;
            }
            Tensor x = gather(data.images, batch_idx);
            Tensor z = sample_noise(cfg.batch, cfg.dz, rng);  // fresh noise for the energy side
            EnergyStepStats es = vgan_energy_step(result.energy, result.gen, x, z, opt_e);
            r.data_energy = es.data_energy;
            r.gen_energy = es.gen_energy;
            r.entropy_data = es.entropy_data;
        },
        per_epoch);
    return result;
}

inline VcdResult train_vcd(const TrainConfig& cfg, const Dataset& data,
                           const std::function<void(std::size_t, VcdResult&)>& per_epoch = {}) {
    cfg.validate();
    Rng rng(cfg.seed);
    VcdResult result;
    result.energy = EnergyModel(build_phi(cfg, data.sample_shape(), rng), cfg.experts, rng, cfg.head_scale);
    result.gen = build_transition_generator(cfg, data.sample_shape(), rng);
    Adadelta opt_e(result.energy.params(), cfg.lr, cfg.adadelta_decay, cfg.adadelta_eps);
    Adadelta opt_g(result.gen.params(), cfg.lr, cfg.adadelta_decay, cfg.adadelta_eps);

    auto all_params = result.energy.params();
    for (auto& p : result.gen.params()) all_params.push_back(p);
    auto all_state = result.energy.state();
    for (auto& p : result.gen.state()) all_state.push_back(p);

    BatchStream gen_stream(data.count(), cfg.batch);  // generator steps take their own pass over the data

    detail::run_epochs(cfg, data, result, rng, all_params, all_state,
        [&](const std::vector<std::size_t>& batch_idx, TrainRecord& r) {
            for (std::size_t s = 0; s < cfg.k; ++s) {
                Tensor xg = gather(data.images, gen_stream.next(rng));
                GenStepStats gs =
                    vcd_generator_step(result.energy, result.gen, xg, cfg.rho, cfg.gen_entropy_term, rng, opt_g);
                r.gen_losses.push_back(gs.loss);
                r.entropy_gen = gs.entropy_gen;
                r.recon_mse = gs.recon_mse;
            }
            Tensor x = gather(data.images, batch_idx);
            EnergyStepStats es = vcd_energy_step(result.energy, result.gen, x, cfg.rho, rng, opt_e);
            r.data_energy = es.data_energy;
            r.gen_energy = es.gen_energy;
            r.entropy_data = es.entropy_data;
        },
        per_epoch);
    return result;
}

inline GanResult train_gan_baseline(const TrainConfig& cfg, const Dataset& data,
                                    const std::function<void(std::size_t, GanResult&)>& per_epoch = {}) {
    cfg.validate();
    Rng rng(cfg.seed);
    GanResult result;
    result.disc = GanModel(build_phi(cfg, data.sample_shape(), rng), rng);
    result.gen = build_direct_generator(cfg, data.sample_shape(), rng);
    Adadelta opt_d(result.disc.params(), cfg.lr, cfg.adadelta_decay, cfg.adadelta_eps);
    Adadelta opt_g(result.gen.params(), cfg.lr, cfg.adadelta_decay, cfg.adadelta_eps);

    auto all_params = result.disc.params();
    for (auto& p : result.gen.params()) all_params.push_back(p);
    std::vector<ParamRef> all_state = result.gen.state();

    detail::run_epochs(cfg, data, result, rng, all_params, all_state,
        [&](const std::vector<std::size_t>& batch_idx, TrainRecord& r) {
            for (std::size_t s = 0; s < cfg.k; ++s) {
                Tensor z = sample_noise(cfg.batch, cfg.dz, rng);
                GenStepStats gs = gan_generator_step(result.disc, result.gen, z, opt_g);
                r.gen_losses.push_back(gs.loss);
            }
            Tensor x = gather(data.images, batch_idx);
            Tensor z = sample_noise(cfg.batch, cfg.dz, rng);
            EnergyStepStats es = gan_discriminator_step(result.disc, result.gen, x, z, opt_d);
            r.data_energy = es.data_energy;
            r.gen_energy = es.gen_energy;
        },
        per_epoch);
    return result;
}

}  // namespace vgf

#endif  // VGF_TRAINING_HPP
