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

#ifndef VGF_ADADELTA_HPP
#define VGF_ADADELTA_HPP

#include <vector>

#include "vgf/graph.hpp"
#include "vgf/tensor.hpp"

namespace vgf {

/// Accumulators for one parameter tensor. The update accumulator tracks the
/// unscaled delta (RMS ratio times gradient); the learning rate scales only
/// the applied step.
struct AdadeltaState {
    Tensor acc_grad;
    Tensor acc_update;
    double decay = 0.95;
    double eps = 1e-6;
    double lr = 0.1;

    AdadeltaState() = default;
    AdadeltaState(const std::vector<std::size_t>& shape, double lr_, double decay_ = 0.95, double eps_ = 1e-6)
        : acc_grad(shape), acc_update(shape), decay(decay_), eps(eps_), lr(lr_) {}
};

inline void adadelta_step(Tensor& param, const Tensor& grad, AdadeltaState& state) {
    check_same_shape(param, grad, "adadelta_step");
    check_same_shape(param, state.acc_grad, "adadelta_step accumulator");
    for (std::size_t i = 0; i < param.size(); ++i) {
        double g = grad[i];
        state.acc_grad[i] = state.decay * state.acc_grad[i] + (1.0 - state.decay) * g * g;
        double delta = std::sqrt(state.acc_update[i] + state.eps) / std::sqrt(state.acc_grad[i] + state.eps) * g;
        state.acc_update[i] = state.decay * state.acc_update[i] + (1.0 - state.decay) * delta * delta;
        param[i] -= state.lr * delta;
    }
}

/// Optimizer over a fixed parameter list. Steps consume and clear nothing:
/// callers zero gradients before each backward.
class Adadelta {
public:
    Adadelta() = default;
    Adadelta(std::vector<ParamRef> params, double lr, double decay = 0.95, double eps = 1e-6)
        : params_(std::move(params)) {
        states_.reserve(params_.size());
        for (auto& p : params_) states_.emplace_back(p.value->shape(), lr, decay, eps);
    }

    void step() {
        for (std::size_t i = 0; i < params_.size(); ++i) {
            ensure_finite(*params_[i].grad, "gradient of " + params_[i].name);
            adadelta_step(*params_[i].value, *params_[i].grad, states_[i]);
        }
    }

    std::size_t param_count() const { return params_.size(); }
    const AdadeltaState& state(std::size_t i) const { return states_.at(i); }

private:
    std::vector<ParamRef> params_;
    std::vector<AdadeltaState> states_;
};

}  // namespace vgf

#endif  // VGF_ADADELTA_HPP
