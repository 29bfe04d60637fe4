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

#ifndef VGF_ENERGY_HPP
#define VGF_ENERGY_HPP

#include <map>
#include <string>

#include "vgf/graph.hpp"
#include "vgf/tensor.hpp"

namespace vgf {

inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

/// Entropy of a Bernoulli(p) in nats. Exactly 0 at the endpoints.
inline double binary_entropy(double p) {
    if (p < 0.0 || p > 1.0) throw std::domain_error("binary_entropy: p must be in [0,1]");
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

/// H(sigmoid(a)) evaluated in logit space: p*softplus(-a) + (1-p)*softplus(a).
/// Exact into full saturation, no clamping needed, and its derivative
/// -a*p*(1-p) is stable everywhere.
inline double binary_entropy_from_logit(double a) {
    double p = stable_sigmoid(a);
    return p * softplus(-a) + (1.0 - p) * softplus(a);
}

inline double binary_entropy_logit_grad(double a) {
    double p = stable_sigmoid(a);
    return -a * p * (1.0 - p);
}

/// Product-of-experts energy: a feature network and K sigmoid experts whose
/// Bernoulli entropies sum to the per-sample energy. Bounded in [0, K ln 2];
/// each expert saturating to 0 or 1 contributes a vanishing term, giving 2^K
/// energy minima.
struct EnergyModel {
    Graph phi;       // features, output [N, d_phi]
    Tensor w;        // [d_phi, K]
    Tensor b;        // [K]
    Tensor dw, db;
    std::size_t d_phi = 0;
    std::size_t experts = 0;

    EnergyModel() = default;

    /// head_scale widens the expert read-out init: at 1 the initial logits
    /// sit deep in the flat zero-gradient region around a = 0, where neither
    /// side of the min-max game receives a usable signal.
    EnergyModel(Graph phi_net, std::size_t k, Rng& rng, double head_scale = 1.0) : phi(std::move(phi_net)) {
        auto out = phi.output_shape();
        if (out.size() != 1) throw std::invalid_argument("EnergyModel: feature network must output a flat vector");
        d_phi = out[0];
        experts = k;
        double lim = head_scale * detail::glorot_limit(d_phi, k);
        w = rng.uniform_tensor({d_phi, k}, -lim, lim);
        b = Tensor({k});
        dw = Tensor({d_phi, k});
        db = Tensor({k});
    }

    double max_energy() const { return static_cast<double>(experts) * std::log(2.0); }

    std::vector<ParamRef> params() {
        std::vector<ParamRef> out;
        for (auto& p : phi.params()) out.push_back({"phi." + p.name, p.value, p.grad});
        out.push_back({"experts.weight", &w, &dw});
        out.push_back({"experts.bias", &b, &db});
        return out;
    }

    std::vector<ParamRef> state() {
        std::vector<ParamRef> out;
        for (auto& p : phi.state()) out.push_back({"phi." + p.name, p.value, nullptr});
        return out;
    }

    void zero_grads() {
        phi.zero_grads();
        std::fill(dw.raw().begin(), dw.raw().end(), 0.0);
        std::fill(db.raw().begin(), db.raw().end(), 0.0);
    }
};

/// Forward products of one batch through the PoE heads.
struct PoeTape {
    Tape phi_tape;
    Tensor feats;   // [N, d_phi]
    Tensor logits;  // [N, K]
    Tensor probs;   // sigmoid(logits)
    Tensor energy;  // [N]
};

inline PoeTape poe_forward(EnergyModel& m, const Tensor& x, Mode mode) {
    PoeTape t;
    t.feats = m.phi.forward(x, mode, t.phi_tape);
    std::size_t n = t.feats.dim(0), k = m.experts;
    t.logits = Tensor({n, k});
    as_matrix(t.logits, n, k).noalias() = as_matrix(t.feats, n, m.d_phi) * as_matrix(m.w, m.d_phi, k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) t.logits[i * k + j] += m.b[j];
    t.probs = Tensor({n, k});
    t.energy = Tensor({n});
    for (std::size_t i = 0; i < n; ++i) {
        double e = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            double a = t.logits[i * k + j];
            t.probs[i * k + j] = stable_sigmoid(a);
            e += binary_entropy_from_logit(a);
        }
        t.energy[i] = e;
    }
    ensure_finite(t.energy, "poe energy");
    return t;
}

/// Batch entropy score: per-expert Bernoulli entropy of the mean activation.
/// Maximal (K ln 2) when every expert averages 0.5, zero when the batch
/// collapses to one saturated activation pattern.
inline double entropy_of_mean_activation(const Tensor& probs) {
    std::size_t n = probs.dim(0), k = probs.dim(1);
    double h = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        double p = 0.0;
        for (std::size_t i = 0; i < n; ++i) p += probs[i * k + j];
        h += binary_entropy(p / static_cast<double>(n));
    }
    return h;
}

/// Backward for loss terms of the form  sum_i d_energy[i] * E_i  +
/// d_batch_entropy * H(mean activations). Accumulates into the model's
/// gradients and returns dL/dx.
inline Tensor poe_backward(EnergyModel& m, const PoeTape& t, const Tensor& d_energy, double d_batch_entropy = 0.0) {
    std::size_t n = t.logits.dim(0), k = m.experts;
    if (d_energy.size() != n) throw std::invalid_argument("poe_backward: per-sample weights must match batch");

    // mean-activation log ratios, clamped so saturated experts keep a finite
    // (and, multiplied by sigma', vanishing) gradient
    std::vector<double> log_ratio(k, 0.0);
    if (d_batch_entropy != 0.0) {
        for (std::size_t j = 0; j < k; ++j) {
            double p = 0.0;
            for (std::size_t i = 0; i < n; ++i) p += t.probs[i * k + j];
            p /= static_cast<double>(n);
            p = std::min(1.0 - 1e-12, std::max(1e-12, p));
            log_ratio[j] = std::log((1.0 - p) / p);
        }
    }

    Tensor d_logits({n, k});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            double a = t.logits[i * k + j];
            double p = t.probs[i * k + j];
            double sig_grad = p * (1.0 - p);
            double g = d_energy[i] * (-a * sig_grad);
            if (d_batch_entropy != 0.0) g += d_batch_entropy * log_ratio[j] * sig_grad / static_cast<double>(n);
            d_logits[i * k + j] = g;
        }

    as_matrix(m.dw, m.d_phi, k).noalias() +=
        as_matrix(t.feats, n, m.d_phi).transpose() * as_matrix(d_logits, n, k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) m.db[j] += d_logits[i * k + j];

    Tensor d_feats({n, m.d_phi});
    as_matrix(d_feats, n, m.d_phi).noalias() = as_matrix(d_logits, n, k) * as_matrix(m.w, m.d_phi, k).transpose();
    return m.phi.backward(d_feats, t.phi_tape);
}

/// Per-sample energies, eval mode.
inline Tensor poe_energy(EnergyModel& m, const Tensor& x) { return poe_forward(m, x, Mode::eval).energy; }

inline double entropy_approx(EnergyModel& m, const Tensor& batch) {
    return entropy_of_mean_activation(poe_forward(m, batch, Mode::eval).probs);
}

/// Same score on a data batch; used as a regularizer on the energy side.
inline double data_entropy_reg(EnergyModel& m, const Tensor& batch) { return entropy_approx(m, batch); }

inline std::map<std::string, Tensor> energy_tensors(EnergyModel& m) {
    std::map<std::string, Tensor> out;
    for (auto& p : m.params()) out.emplace(p.name, *p.value);
    for (auto& p : m.state()) out.emplace(p.name, *p.value);
    return out;
}

inline void load_energy_tensors(EnergyModel& m, const std::map<std::string, Tensor>& tensors) {
    auto assign = [&](ParamRef p) {
        auto it = tensors.find(p.name);
        if (it == tensors.end()) throw std::runtime_error("checkpoint is missing tensor '" + p.name + "'");
        if (it->second.shape() != p.value->shape())
            throw std::runtime_error("checkpoint tensor '" + p.name + "' has shape " + it->second.shape_string() +
                                     ", expected " + p.value->shape_string());
        *p.value = it->second;
    };
    for (auto& p : m.params()) assign(p);
    for (auto& p : m.state()) assign(p);
}

/// Single-sigmoid head: E(x) = -log D(x) = softplus(-(w.phi(x)+b)), the
/// nonnegative, uni-modal energy the baseline adversarial loop uses.
struct GanModel {
    Graph phi;
    Tensor w;  // [d_phi]
    Tensor b;  // [1]
    Tensor dw, db;
    std::size_t d_phi = 0;

    GanModel() = default;

    GanModel(Graph phi_net, Rng& rng) : phi(std::move(phi_net)) {
        auto out = phi.output_shape();
        if (out.size() != 1) throw std::invalid_argument("GanModel: feature network must output a flat vector");
        d_phi = out[0];
        double lim = detail::glorot_limit(d_phi, 1);
        w = rng.uniform_tensor({d_phi}, -lim, lim);
        b = Tensor({1});
        dw = Tensor({d_phi});
        db = Tensor({1});
    }

    std::vector<ParamRef> params() {
        std::vector<ParamRef> out;
        for (auto& p : phi.params()) out.push_back({"phi." + p.name, p.value, p.grad});
        out.push_back({"head.weight", &w, &dw});
        out.push_back({"head.bias", &b, &db});
        return out;
    }

    void zero_grads() {
        phi.zero_grads();
        std::fill(dw.raw().begin(), dw.raw().end(), 0.0);
        std::fill(db.raw().begin(), db.raw().end(), 0.0);
    }
};

struct GanTape {
    Tape phi_tape;
    Tensor feats;
    Tensor logits;  // [N]
    Tensor energy;  // softplus(-logit) >= 0
};

inline GanTape gan_forward(GanModel& m, const Tensor& x, Mode mode) {
    GanTape t;
    t.feats = m.phi.forward(x, mode, t.phi_tape);
    std::size_t n = t.feats.dim(0);
    t.logits = Tensor({n});
    t.energy = Tensor({n});
    for (std::size_t i = 0; i < n; ++i) {
        double s = m.b[0];
        for (std::size_t j = 0; j < m.d_phi; ++j) s += t.feats[i * m.d_phi + j] * m.w[j];
        t.logits[i] = s;
        t.energy[i] = softplus(-s);
    }
    ensure_finite(t.energy, "gan energy");
    return t;
}

/// Backward from per-sample logit gradients; returns dL/dx.
inline Tensor gan_backward(GanModel& m, const GanTape& t, const Tensor& d_logits) {
    std::size_t n = t.logits.dim(0);
    if (d_logits.size() != n) throw std::invalid_argument("gan_backward: logit gradients must match batch");
    Tensor d_feats({n, m.d_phi});
    for (std::size_t i = 0; i < n; ++i) {
        m.db[0] += d_logits[i];
        for (std::size_t j = 0; j < m.d_phi; ++j) {
            m.dw[j] += d_logits[i] * t.feats[i * m.d_phi + j];
            d_feats[i * m.d_phi + j] = d_logits[i] * m.w[j];
        }
    }
    return m.phi.backward(d_feats, t.phi_tape);
}

inline Tensor gan_energy(GanModel& m, const Tensor& x) { return gan_forward(m, x, Mode::eval).energy; }

inline std::map<std::string, Tensor> gan_tensors(GanModel& m) {
    std::map<std::string, Tensor> out;
    for (auto& p : m.params()) out.emplace(p.name, *p.value);
    return out;
}

}  // namespace vgf

#endif  // VGF_ENERGY_HPP
