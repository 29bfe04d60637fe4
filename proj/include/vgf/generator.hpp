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

#ifndef VGF_GENERATOR_HPP
#define VGF_GENERATOR_HPP

#include <map>
#include <string>
#include <vector>

#include "vgf/energy.hpp"
#include "vgf/graph.hpp"
#include "vgf/rng.hpp"

namespace vgf {

/// Noise-to-sample generator G(z).
struct DirectGenerator {
    Graph net;
    std::size_t dz = 0;

    DirectGenerator() = default;
    DirectGenerator(Graph g, std::size_t noise_dim) : net(std::move(g)), dz(noise_dim) {}

    std::vector<ParamRef> params() {
        std::vector<ParamRef> out;
        for (auto& p : net.params()) out.push_back({"gen." + p.name, p.value, p.grad});
        return out;
    }

    std::vector<ParamRef> state() {
        std::vector<ParamRef> out;
        for (auto& p : net.state()) out.push_back({"gen." + p.name, p.value, nullptr});
        return out;
    }

    void zero_grads() { net.zero_grads(); }
};

/// i.i.d. uniform noise on [-1,1]^d, the range the tanh bottleneck produces.
inline Tensor sample_noise(std::size_t n, std::size_t d, Rng& rng) {
    return rng.uniform_tensor({n, d}, -1.0, 1.0);
}

/// Conditional sampler p(x_tilde | x): encode, mix half the bottleneck
/// coordinates with fresh noise, decode with the same decoder that produced
/// the plain reconstruction.
struct TransitionGenerator {
    Graph encoder;  // x -> h in (-1,1)^d (tanh top)
    Graph decoder;  // h -> x in [0,1]   (sigmoid top)
    std::size_t d = 0;

    TransitionGenerator() = default;
    TransitionGenerator(Graph enc, Graph dec, std::size_t bottleneck) : encoder(std::move(enc)), decoder(std::move(dec)), d(bottleneck) {
        auto eo = encoder.output_shape();
        if (eo.size() != 1 || eo[0] != d)
            throw std::invalid_argument("TransitionGenerator: encoder must output the bottleneck width");
    }

    std::vector<ParamRef> params() {
        std::vector<ParamRef> out;
        for (auto& p : encoder.params()) out.push_back({"enc." + p.name, p.value, p.grad});
        for (auto& p : decoder.params()) out.push_back({"dec." + p.name, p.value, p.grad});
        return out;
    }

    std::vector<ParamRef> state() {
        std::vector<ParamRef> out;
        for (auto& p : encoder.state()) out.push_back({"enc." + p.name, p.value, nullptr});
        for (auto& p : decoder.state()) out.push_back({"dec." + p.name, p.value, nullptr});
        return out;
    }

    void zero_grads() {
        encoder.zero_grads();
        decoder.zero_grads();
    }
};

struct TransitionSample {
    Tensor xbar;    // Decode(h), plain reconstruction
    Tensor xtilde;  // Decode(htilde), the conditional sample
    Tensor h, htilde, mask, z;
    Tape enc_tape, dec_bar_tape, dec_til_tape;
};

/// Deterministic core with the mask and noise supplied by the caller.
/// htilde = mask*z + (1-mask)*h, coordinate by coordinate.
inline TransitionSample transition_apply(TransitionGenerator& g, const Tensor& x, const Tensor& mask, const Tensor& z,
                                         Mode mode = Mode::train) {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < 0.0 || x[i] > 1.0)
            throw std::invalid_argument("transition sample: input values must lie in [0,1]");
    TransitionSample s;
    s.mask = mask;
    s.z = z;
    s.h = g.encoder.forward(x, mode, s.enc_tape);
    check_same_shape(s.h, mask, "transition mask");
    check_same_shape(s.h, z, "transition noise");
    s.xbar = g.decoder.forward(s.h, mode, s.dec_bar_tape);
    s.htilde = Tensor(s.h.shape());
    for (std::size_t i = 0; i < s.h.size(); ++i) s.htilde[i] = mask[i] * z[i] + (1.0 - mask[i]) * s.h[i];
    s.xtilde = g.decoder.forward(s.htilde, mode, s.dec_til_tape);
    return s;
}

/// Draw order per sample batch: first the binary mask (probability 0.5 per
/// coordinate), then the uniform noise vector.
inline TransitionSample transition_sample(TransitionGenerator& g, const Tensor& x, Rng& rng,
                                          Mode mode = Mode::train) {
    std::size_t n = x.dim(0);
    Tensor mask = rng.bernoulli_tensor({n, g.d}, 0.5);
    Tensor z = sample_noise(n, g.d, rng);
    return transition_apply(g, x, mask, z, mode);
}

/// Pieces of the transition-generator objective:
///   rho * mean_i E(xtilde_i) + (1-rho) * mean_i ||xbar_i - x_i||^2 / pixels
/// minus the batch entropy score when the diversity term is enabled.
struct VcdParts {
    TransitionSample sample;
    PoeTape poe;  // over xtilde; empty when rho == 0 and the entropy term is off
    double energy_term = 0.0;
    double recon_mse = 0.0;
    double gen_entropy = 0.0;
    double loss = 0.0;
};

inline double mean_squared_error(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mse");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s / static_cast<double>(a.size());
}

inline VcdParts vcd_generator_forward(EnergyModel& energy, TransitionGenerator& g, const Tensor& x, double rho,
                                      bool entropy_term, const Tensor& mask, const Tensor& z,
                                      Mode mode = Mode::train) {
    if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("vcd loss: rho must be in [0,1]");
    VcdParts parts;
    parts.sample = transition_apply(g, x, mask, z, mode);
    parts.recon_mse = mean_squared_error(parts.sample.xbar, x);
    if (rho > 0.0 || entropy_term) {
        // the energy side is frozen here: train_frozen keeps any of its state intact
        parts.poe = poe_forward(energy, parts.sample.xtilde, Mode::train_frozen);
        parts.energy_term = mean(parts.poe.energy);
        parts.gen_entropy = entropy_of_mean_activation(parts.poe.probs);
    }
    parts.loss = rho * parts.energy_term + (1.0 - rho) * parts.recon_mse;
    if (entropy_term) parts.loss -= parts.gen_entropy;
    return parts;
}

inline VcdParts vcd_generator_forward(EnergyModel& energy, TransitionGenerator& g, const Tensor& x, double rho,
                                      bool entropy_term, Rng& rng, Mode mode = Mode::train) {
    std::size_t n = x.dim(0);
    Tensor mask = rng.bernoulli_tensor({n, g.d}, 0.5);
    Tensor z = sample_noise(n, g.d, rng);
    return vcd_generator_forward(energy, g, x, rho, entropy_term, mask, z, mode);
}

/// Accumulates gradients into the transition generator only; the energy
/// model's gradient buffers are scratch here and its parameters are not
/// stepped by the caller.
inline void vcd_generator_backward(EnergyModel& energy, TransitionGenerator& g, VcdParts& parts, const Tensor& x,
                                   double rho, bool entropy_term) {
    std::size_t n = x.dim(0);
    Tensor dh(parts.sample.h.shape());

    if (rho > 0.0 || entropy_term) {
        Tensor d_energy = Tensor::full({n}, rho / static_cast<double>(n));
        Tensor dxtilde = poe_backward(energy, parts.poe, d_energy, entropy_term ? -1.0 : 0.0);
        Tensor dh_til = g.decoder.backward(dxtilde, parts.sample.dec_til_tape);
        for (std::size_t i = 0; i < dh.size(); ++i) dh[i] += (1.0 - parts.sample.mask[i]) * dh_til[i];
    }

    double w = (1.0 - rho) * 2.0 / static_cast<double>(x.size());
    Tensor dxbar(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) dxbar[i] = w * (parts.sample.xbar[i] - x[i]);
    Tensor dh_bar = g.decoder.backward(dxbar, parts.sample.dec_bar_tape);
    for (std::size_t i = 0; i < dh.size(); ++i) dh[i] += dh_bar[i];

    g.encoder.backward(dh, parts.sample.enc_tape);
}

/// Objective value only (no gradients, no entropy term): the rho-mixed
/// energy/reconstruction trade-off.
inline double vcd_generator_loss(EnergyModel& energy, TransitionGenerator& g, const Tensor& x, double rho, Rng& rng) {
    return vcd_generator_forward(energy, g, x, rho, false, rng, Mode::eval).loss;
}

/// Runs the transition operator repeatedly: x_{t+1} = sample(x_t).xtilde.
/// Returns all intermediate samples, oldest first.
inline std::vector<Tensor> simulate_chain(TransitionGenerator& g, const Tensor& x0, std::size_t steps, Rng& rng) {
    if (steps < 1) throw std::invalid_argument("simulate_chain: steps must be >= 1");
    std::vector<Tensor> out;
    out.reserve(steps);
    Tensor x = x0;
    for (std::size_t t = 0; t < steps; ++t) {
        x = transition_sample(g, x, rng, Mode::eval).xtilde;
        out.push_back(x);
    }
    return out;
}

inline std::map<std::string, Tensor> transition_tensors(TransitionGenerator& g) {
    std::map<std::string, Tensor> out;
    for (auto& p : g.params()) out.emplace(p.name, *p.value);
    for (auto& p : g.state()) out.emplace(p.name, *p.value);
    return out;
}

inline void load_transition_tensors(TransitionGenerator& g, const std::map<std::string, Tensor>& tensors) {
    auto assign = [&](ParamRef p) {
        auto it = tensors.find(p.name);
        if (it == tensors.end()) throw std::runtime_error("checkpoint is missing tensor '" + p.name + "'");
        if (it->second.shape() != p.value->shape())
            throw std::runtime_error("checkpoint tensor '" + p.name + "' has shape " + it->second.shape_string() +
                                     ", expected " + p.value->shape_string());
        *p.value = it->second;
    };
    for (auto& p : g.params()) assign(p);
    for (auto& p : g.state()) assign(p);
}

inline std::map<std::string, Tensor> generator_tensors(DirectGenerator& g) {
    std::map<std::string, Tensor> out;
    for (auto& p : g.params()) out.emplace(p.name, *p.value);
    for (auto& p : g.state()) out.emplace(p.name, *p.value);
    return out;
}

inline void load_generator_tensors(DirectGenerator& g, const std::map<std::string, Tensor>& tensors) {
    auto assign = [&](ParamRef p) {
        auto it = tensors.find(p.name);
        if (it == tensors.end()) throw std::runtime_error("checkpoint is missing tensor '" + p.name + "'");
        if (it->second.shape() != p.value->shape())
            throw std::runtime_error("checkpoint tensor '" + p.name + "' has shape " + it->second.shape_string() +
                                     ", expected " + p.value->shape_string());
        *p.value = it->second;
    };
    for (auto& p : g.params()) assign(p);
    for (auto& p : g.state()) assign(p);
}

}  // namespace vgf

#endif  // VGF_GENERATOR_HPP
