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

#ifndef VGF_TOYEVAL_HPP
#define VGF_TOYEVAL_HPP

#include <array>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "vgf/energy.hpp"
#include "vgf/tensor.hpp"

namespace vgf {

/// Batch energy evaluator over points [M, dims] -> [M].
using EnergyFn = std::function<Tensor(const Tensor&)>;

/// Regular 1D or 2D grid for trapezoid quadrature of exp(-E).
struct QuadratureGrid {
    std::size_t dims;
    std::array<double, 2> lo, hi;
    std::size_t points;  // per dimension

    QuadratureGrid(std::size_t dims_, std::array<double, 2> lo_, std::array<double, 2> hi_, std::size_t points_)
        : dims(dims_), lo(lo_), hi(hi_), points(points_) {
        if (dims < 1 || dims > 2) throw std::invalid_argument("quadrature: dims must be 1 or 2");
        if (points < 16) throw std::invalid_argument("quadrature: need at least 16 points per dimension");
        for (std::size_t d = 0; d < dims; ++d)
            if (!(lo[d] < hi[d])) throw std::invalid_argument("quadrature: lo must be below hi");
    }

    static QuadratureGrid line(double lo_, double hi_, std::size_t points_) {
        return QuadratureGrid(1, {lo_, 0.0}, {hi_, 0.0}, points_);
    }

    static QuadratureGrid square(double lo_, double hi_, std::size_t points_) {
        return QuadratureGrid(2, {lo_, lo_}, {hi_, hi_}, points_);
    }

    std::size_t total_points() const { return dims == 1 ? points : points * points; }

    double step(std::size_t d) const { return (hi[d] - lo[d]) / static_cast<double>(points - 1); }

    Tensor points_tensor() const {
        Tensor out({total_points(), dims});
        if (dims == 1) {
            for (std::size_t i = 0; i < points; ++i) out[i] = lo[0] + step(0) * static_cast<double>(i);
        } else {
            std::size_t q = 0;
            for (std::size_t i = 0; i < points; ++i)
                for (std::size_t j = 0; j < points; ++j) {
                    out[q * 2] = lo[0] + step(0) * static_cast<double>(i);
                    out[q * 2 + 1] = lo[1] + step(1) * static_cast<double>(j);
                    ++q;
                }
        }
        return out;
    }

    /// Trapezoid weight per grid point, cell volume included.
    std::vector<double> weights() const {
        auto axis = [&](std::size_t d) {
            std::vector<double> w(points, step(d));
            w.front() *= 0.5;
            w.back() *= 0.5;
            return w;
        };
        auto w0 = axis(0);
        if (dims == 1) return w0;
        auto w1 = axis(1);
        std::vector<double> w(points * points);
        for (std::size_t i = 0; i < points; ++i)
            for (std::size_t j = 0; j < points; ++j) w[i * points + j] = w0[i] * w1[j];
        return w;
    }

    bool contains(const double* x) const {
        for (std::size_t d = 0; d < dims; ++d)
            if (x[d] < lo[d] || x[d] > hi[d]) return false;
        return true;
    }
};

struct LogPartition {
    double value = 0.0;
    double refine_delta = 0.0;  // |log Z at 2x resolution - value|

    /// Doubling the resolution moving log Z by more than 1e-3 flags the grid
    /// as too coarse for this energy.
    bool converged() const { return refine_delta <= 1e-3; }
};

namespace detail {

inline double log_trapezoid_exp_neg(const EnergyFn& energy, const QuadratureGrid& grid) {
    Tensor pts = grid.points_tensor();
    Tensor e = energy(pts);
    if (e.size() != grid.total_points()) throw std::invalid_argument("quadrature: energy returned wrong count");
    ensure_finite(e, "quadrature energies");
    auto w = grid.weights();
    double m = -e[0];
    for (std::size_t i = 1; i < e.size(); ++i) m = std::max(m, -e[i]);
    double s = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) s += w[i] * std::exp(-e[i] - m);  // max-shift
    return m + std::log(s);
}

}  // namespace detail

/// log Z = log integral of exp(-E) over the grid box, with a self-check at
/// double resolution.
inline LogPartition exact_log_partition(const EnergyFn& energy, const QuadratureGrid& grid) {
    LogPartition out;
    out.value = detail::log_trapezoid_exp_neg(energy, grid);
    QuadratureGrid fine(grid.dims, grid.lo, grid.hi, grid.points * 2);
    out.refine_delta = std::abs(detail::log_trapezoid_exp_neg(energy, fine) - out.value);
    return out;
}

/// Mean data energy plus log Z: the exact negative log likelihood of the
/// density exp(-E)/Z restricted to the grid box.
inline double exact_nll(const EnergyFn& energy, const Tensor& data, const QuadratureGrid& grid) {
    std::size_t n = data.dim(0);
    if (data.size() != n * grid.dims) throw std::invalid_argument("exact_nll: data must be [n, dims]");
    for (std::size_t i = 0; i < n; ++i)
        if (!grid.contains(data.data() + i * grid.dims))
            throw std::domain_error("exact_nll: data point outside the quadrature range");
    Tensor e = energy(data);
    return mean(e) + exact_log_partition(energy, grid).value;
}

/// The three bound terms, the quadrature NLL and their gap.
struct BoundReport {
    double data_term = 0.0;  // mean energy under the data
    double q_term = 0.0;     // mean energy under q samples
    double entropy = 0.0;    // analytic H(q)
    double bound = 0.0;      // data_term - q_term + entropy
    double exact_nll = 0.0;
    double gap = 0.0;        // exact_nll - bound, >= 0 up to MC noise
    double mc_stderr = 0.0;  // standard error of q_term

    static std::string csv_header() { return "data_term,q_term,entropy,bound,exact_nll,gap,mc_stderr"; }

    std::string csv_row() const {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", data_term, q_term, entropy, bound,
                      exact_nll, gap, mc_stderr);
        return buf;
    }
};

inline BoundReport bound_value(const EnergyFn& energy, const Tensor& data, const Tensor& q_samples, double q_entropy,
                               const QuadratureGrid& grid) {
    if (q_samples.dim(0) < 1 || q_samples.size() == 0) throw std::invalid_argument("bound_value: empty sample set");
    BoundReport r;
    r.data_term = mean(energy(data));
    Tensor eq = energy(q_samples);
    r.q_term = mean(eq);
    double var = 0.0;
    for (std::size_t i = 0; i < eq.size(); ++i) {
        double d = eq[i] - r.q_term;
        var += d * d;
    }
    std::size_t n = eq.size();
    r.mc_stderr = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n)) : 0.0;
    r.entropy = q_entropy;
    r.bound = r.data_term - r.q_term + r.entropy;
    r.exact_nll = exact_nll(energy, data, grid);
    r.gap = r.exact_nll - r.bound;
    return r;
}

/// Fraction of samples within `radius` of each center; leftovers reported
/// separately.
struct ModeCoverage {
    std::vector<double> fractions;
    double unassigned = 0.0;

    std::size_t covered(double min_mass) const {
        std::size_t c = 0;
        for (double f : fractions)
            if (f >= min_mass) ++c;
        return c;
    }
};

inline ModeCoverage mode_coverage(const Tensor& samples, const std::vector<std::array<double, 2>>& centers,
                                  double radius) {
    if (radius <= 0.0) throw std::invalid_argument("mode_coverage: radius must be positive");
    std::size_t n = samples.dim(0);
    std::size_t dims = samples.size() / n;
    if (dims != 2) throw std::invalid_argument("mode_coverage: expected 2-dimensional samples");
    ModeCoverage out;
    out.fractions.assign(centers.size(), 0.0);
    std::size_t stray = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double x = samples[i * 2], y = samples[i * 2 + 1];
        double best = 1e300;
        std::size_t best_k = 0;
        for (std::size_t k = 0; k < centers.size(); ++k) {
            double dx = x - centers[k][0], dy = y - centers[k][1];
            double d2 = dx * dx + dy * dy;
            if (d2 < best) {
                best = d2;
                best_k = k;
            }
        }
        if (best <= radius * radius)
            out.fractions[best_k] += 1.0;
        else
            ++stray;
    }
    for (auto& f : out.fractions) f /= static_cast<double>(n);
    out.unassigned = static_cast<double>(stray) / static_cast<double>(n);
    return out;
}

/// Adapts a PoE model to the point-batch signature, chunked to bound the
/// forward-pass footprint. Points are fed as [M,1,1,dims] images.
inline EnergyFn poe_energy_fn(EnergyModel& model, std::size_t chunk = 4096) {
    return [&model, chunk](const Tensor& pts) {
        std::size_t m = pts.dim(0), dims = pts.size() / m;
        Tensor out({m});
        for (std::size_t start = 0; start < m; start += chunk) {
            std::size_t count = std::min(chunk, m - start);
            Tensor batch({count, 1, 1, dims});
            std::copy(pts.data() + start * dims, pts.data() + (start + count) * dims, batch.data());
            Tensor e = poe_energy(model, batch);
            std::copy(e.data(), e.data() + count, out.data() + start);
        }
        return out;
    };
}

}  // namespace vgf

#endif  // VGF_TOYEVAL_HPP
