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

#ifndef VGF_GRADCHECK_HPP
#define VGF_GRADCHECK_HPP

#include <functional>
#include <string>
#include <vector>

#include "vgf/graph.hpp"
#include "vgf/tensor.hpp"

namespace vgf {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst;  // "param[i]" or "input[i]" of the worst element

    void merge(double err, const std::string& where) {
        if (err > max_rel_err) {
            max_rel_err = err;
            worst = where;
        }
    }
};

/// Central-difference check of a scalar-valued function against an analytic
/// gradient. The numeric side only ever calls `value`, so it is independent
/// of whatever backward pass produced `analytic`.
inline void check_against_central_diff(const std::function<double()>& value, Tensor& x, const Tensor& analytic,
                                       const std::string& label, GradCheckResult& result, double h = 1e-5) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        double keep = x[i];
        x[i] = keep + h;
        double fp = value();
        x[i] = keep - h;
        double fm = value();
        x[i] = keep;
        double numeric = (fp - fm) / (2.0 * h);
        double denom = std::max({1.0, std::abs(numeric), std::abs(analytic[i])});
        result.merge(std::abs(numeric - analytic[i]) / denom, label + "[" + std::to_string(i) + "]");
    }
}

/// Checks every parameter gradient and the input gradient of `graph` for the
/// loss sum(coeffs * output). Stochastic layers are made repeatable by
/// reseeding the forward rng identically for every evaluation.
inline GradCheckResult check_graph_gradients(Graph& graph, const Tensor& input, const Tensor& coeffs,
                                             std::uint64_t seed = 17, double h = 1e-5) {
    auto loss = [&](const Tensor& x) {
        Rng rng(seed);
        Tape tape;
        Tensor y = graph.forward(x, Mode::train, tape, &rng);
        check_same_shape(y, coeffs, "gradcheck coefficients");
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * coeffs[i];
        return s;
    };

    graph.zero_grads();
    Rng rng(seed);
    Tape tape;
    Tensor y = graph.forward(input, Mode::train, tape, &rng);
    Tensor input_grad = graph.backward(coeffs, tape);

    GradCheckResult result;
    Tensor x = input;
    check_against_central_diff([&] { return loss(x); }, x, input_grad, "input", result, h);
    for (auto& p : graph.params()) {
        Tensor& v = *p.value;
        check_against_central_diff([&] { return loss(input); }, v, *p.grad, p.name, result, h);
    }
    return result;
}

}  // namespace vgf

#endif  // VGF_GRADCHECK_HPP
