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

#ifndef VGF_RNG_HPP
#define VGF_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "vgf/tensor.hpp"

namespace vgf {

/// Seeded random source. All sampling goes through the hand-rolled mappings
/// below (never std distributions, whose output is implementation-defined),
/// so a seed fully determines every stream on any platform. Draw counts are
/// tracked so tests can audit consumption.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0,1) with 53-bit resolution.
    double uniform() {
        ++draws_;
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; consumes exactly two draws.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, n).
    std::uint64_t integer(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

    /// Index sampled from unnormalized nonnegative weights.
    std::size_t categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return weights.empty() ? 0 : weights.size() - 1;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[integer(i)]);
    }

    Tensor uniform_tensor(std::vector<std::size_t> shape, double lo, double hi) {
        Tensor t(std::move(shape));
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = uniform(lo, hi);
        return t;
    }

    Tensor normal_tensor(std::vector<std::size_t> shape, double sigma) {
        Tensor t(std::move(shape));
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = sigma * normal();
        return t;
    }

    /// {0,1}-valued tensor, each entry 1 with probability p.
    Tensor bernoulli_tensor(std::vector<std::size_t> shape, double p) {
        Tensor t(std::move(shape));
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = bernoulli(p) ? 1.0 : 0.0;
        return t;
    }

    std::uint64_t draw_count() const { return draws_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t draws_ = 0;
};

}  // namespace vgf

#endif  // VGF_RNG_HPP
