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

#ifndef VGF_GRAPH_HPP
#define VGF_GRAPH_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "vgf/rng.hpp"
#include "vgf/tensor.hpp"

namespace vgf {

/// train        — batch statistics, running stats updated, stochastic layers on
/// train_frozen — batch statistics, but NO state mutation (used when a frozen
///                network produces samples inside another network's update)
/// eval         — running statistics, stochastic layers off
enum class Mode { train, train_frozen, eval };

struct ParamRef {
    std::string name;
    Tensor* value = nullptr;
    Tensor* grad = nullptr;  // null for non-trainable state
};

/// Per-layer forward cache. Generic slots so one Tape type serves all layers.
struct LayerCache {
    Tensor input;
    Tensor a;  // layer-specific (normalized input, mask, output, ...)
    Tensor b;
    std::vector<std::uint32_t> idx;
};

/// One forward pass worth of caches. A Graph can be run through several live
/// tapes at once (the shared-decoder path needs two), so the tape is owned by
/// the caller, not the graph.
struct Tape {
    std::vector<LayerCache> entries;
    bool valid = false;
};

inline double stable_sigmoid(double a) {
    if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
    double e = std::exp(a);
    return e / (1.0 + e);
}

class Layer {
public:
    explicit Layer(std::string name) : name_(std::move(name)) {}
    virtual ~Layer() = default;

    virtual std::string kind() const = 0;
    const std::string& name() const { return name_; }
    void rename(std::string name) { name_ = std::move(name); }

    /// Per-sample output shape; throws on any construction-time mismatch.
    virtual std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const = 0;

    virtual Tensor forward(const Tensor& x, Mode mode, LayerCache& cache, Rng* rng) = 0;

    /// Propagates the upstream gradient and accumulates parameter gradients.
    virtual Tensor backward(const Tensor& g, const LayerCache& cache) = 0;

    virtual std::vector<ParamRef> params() { return {}; }
    virtual std::vector<ParamRef> state() { return {}; }
    virtual void init(Rng&) {}

protected:
    std::string name_;
};

namespace detail {

inline double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

// cols[(c*k+ki)*k+kj, oy*ow+ox] = img[c, oy*s+ki-p, ox*s+kj-p] (0 outside)
inline void im2col(const double* img, std::size_t C, std::size_t H, std::size_t W, std::size_t k, std::size_t s,
                   std::size_t p, std::size_t oh, std::size_t ow, double* cols) {
    const std::ptrdiff_t pi = static_cast<std::ptrdiff_t>(p);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t ki = 0; ki < k; ++ki)
            for (std::size_t kj = 0; kj < k; ++kj) {
                double* row = cols + ((c * k + ki) * k + kj) * oh * ow;
                for (std::size_t oy = 0; oy < oh; ++oy) {
                    std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s + ki) - pi;
                    bool row_in = iy >= 0 && iy < static_cast<std::ptrdiff_t>(H);
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s + kj) - pi;
                        row[oy * ow + ox] = (row_in && ix >= 0 && ix < static_cast<std::ptrdiff_t>(W))
                                                ? img[(c * H + static_cast<std::size_t>(iy)) * W +
                                                      static_cast<std::size_t>(ix)]
                                                : 0.0;
                    }
                }
            }
}

// im2col into a matrix whose rows are spaced row_stride apart, so several
// samples can share one column-block matrix.
inline void im2col_strided(const double* img, std::size_t C, std::size_t H, std::size_t W, std::size_t k,
                           std::size_t s, std::size_t p, std::size_t oh, std::size_t ow, double* cols,
                           std::size_t row_stride) {
    const std::ptrdiff_t pi = static_cast<std::ptrdiff_t>(p);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t ki = 0; ki < k; ++ki)
            for (std::size_t kj = 0; kj < k; ++kj) {
                double* row = cols + ((c * k + ki) * k + kj) * row_stride;
                for (std::size_t oy = 0; oy < oh; ++oy) {
                    std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s + ki) - pi;
                    bool row_in = iy >= 0 && iy < static_cast<std::ptrdiff_t>(H);
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s + kj) - pi;
                        row[oy * ow + ox] = (row_in && ix >= 0 && ix < static_cast<std::ptrdiff_t>(W))
                                                ? img[(c * H + static_cast<std::size_t>(iy)) * W +
                                                      static_cast<std::size_t>(ix)]
                                                : 0.0;
                    }
                }
            }
}

// Adjoint of im2col: scatter-add columns back into the image.
inline void col2im_add(const double* cols, std::size_t C, std::size_t H, std::size_t W, std::size_t k, std::size_t s,
                       std::size_t p, std::size_t oh, std::size_t ow, double* img) {
    const std::ptrdiff_t pi = static_cast<std::ptrdiff_t>(p);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t ki = 0; ki < k; ++ki)
            for (std::size_t kj = 0; kj < k; ++kj) {
                const double* row = cols + ((c * k + ki) * k + kj) * oh * ow;
                for (std::size_t oy = 0; oy < oh; ++oy) {
                    std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s + ki) - pi;
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s + kj) - pi;
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                        img[(c * H + static_cast<std::size_t>(iy)) * W + static_cast<std::size_t>(ix)] +=
                            row[oy * ow + ox];
                    }
                }
            }
}

}  // namespace detail

class Dense final : public Layer {
public:
    Dense(std::string name, std::size_t in, std::size_t out)
        : Layer(std::move(name)),
          in_(in),
          out_(out),
          w_({out, in}),
          b_({out}),
          dw_({out, in}),
          db_({out}) {}

    std::string kind() const override { return "dense"; }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        if (in.size() != 1 || in[0] != in_)
            throw std::invalid_argument(name_ + ": dense expects [" + std::to_string(in_) + "]");
        return {out_};
    }

    Tensor forward(const Tensor& x, Mode, LayerCache& cache, Rng*) override {
        std::size_t n = x.dim(0);
        cache.input = x;
        Tensor y({n, out_});
        as_matrix(y, n, out_).noalias() = as_matrix(x, n, in_) * as_matrix(w_, out_, in_).transpose();
        double* yd = y.data();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < out_; ++j) yd[i * out_ + j] += b_[j];
        return y;
    }

    Tensor backward(const Tensor& g, const LayerCache& cache) override {
        std::size_t n = g.dim(0);
        as_matrix(dw_, out_, in_).noalias() +=
            as_matrix(g, n, out_).transpose() * as_matrix(cache.input, n, in_);
        const double* gd = g.data();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < out_; ++j) db_[j] += gd[i * out_ + j];
        Tensor dx({n, in_});
        as_matrix(dx, n, in_).noalias() = as_matrix(g, n, out_) * as_matrix(w_, out_, in_);
        return dx;
    }

    std::vector<ParamRef> params() override {
        return {{name_ + ".weight", &w_, &dw_}, {name_ + ".bias", &b_, &db_}};
    }

    void init(Rng& rng) override {
        double lim = detail::glorot_limit(in_, out_);
        for (std::size_t i = 0; i < w_.size(); ++i) w_[i] = rng.uniform(-lim, lim);
        std::fill(b_.raw().begin(), b_.raw().end(), 0.0);
    }

private:
    std::size_t in_, out_;
    Tensor w_, b_, dw_, db_;
};

class Conv2d final : public Layer {
public:
    Conv2d(std::string name, std::size_t cin, std::size_t cout, std::size_t k, std::size_t stride, std::size_t pad)
        : Layer(std::move(name)),
          cin_(cin),
          cout_(cout),
          k_(k),
          s_(stride),
          p_(pad),
          w_({cout, cin, k, k}),
          b_({cout}),
          dw_({cout, cin, k, k}),
          db_({cout}) {}

    std::string kind() const override { return "conv2d"; }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        if (in.size() != 3 || in[0] != cin_)
            throw std::invalid_argument(name_ + ": conv2d expects [" + std::to_string(cin_) + ",H,W]");
        std::size_t h = in[1], w = in[2];
        if (h + 2 * p_ < k_ || w + 2 * p_ < k_) throw std::invalid_argument(name_ + ": kernel larger than input");
        return {cout_, (h + 2 * p_ - k_) / s_ + 1, (w + 2 * p_ - k_) / s_ + 1};
    }

    // Samples are processed in fixed-size chunks: one im2col buffer and one
    // GEMM per chunk. Chunk boundaries never depend on the thread count, so
    // results are bit-identical for any VGF_THREADS.
    static constexpr std::size_t kChunk = 16;

    Tensor forward(const Tensor& x, Mode, LayerCache& cache, Rng*) override {
        std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
        auto os = output_shape({x.dim(1), h, w});
        std::size_t oh = os[1], ow = os[2], cols_rows = cin_ * k_ * k_, spatial = oh * ow;
        cache.input = x;
        Tensor y({n, cout_, oh, ow});
        std::size_t chunks = (n + kChunk - 1) / kChunk;
        parallel_for(chunks, [&](std::size_t ci) {
            std::size_t lo = ci * kChunk, hi_s = std::min(n, lo + kChunk), m = hi_s - lo;
            dvec cols(cols_rows * m * spatial);
            for (std::size_t i = 0; i < m; ++i)
                detail::im2col_strided(x.data() + (lo + i) * cin_ * h * w, cin_, h, w, k_, s_, p_, oh, ow,
                                       cols.data() + i * spatial, m * spatial);
            dvec out(cout_ * m * spatial);
            EMap(out.data(), cout_, m * spatial).noalias() =
                as_matrix(w_, cout_, cols_rows) * ECMap(cols.data(), cols_rows, m * spatial);
            for (std::size_t i = 0; i < m; ++i) {
                double* yi = y.data() + (lo + i) * cout_ * spatial;
                for (std::size_t c = 0; c < cout_; ++c)
                    for (std::size_t q = 0; q < spatial; ++q)
                        yi[c * spatial + q] = out[c * m * spatial + i * spatial + q] + b_[c];
            }
        });
        return y;
    }

    Tensor backward(const Tensor& g, const LayerCache& cache) override {
        const Tensor& x = cache.input;
        std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
        std::size_t oh = g.dim(2), ow = g.dim(3), cols_rows = cin_ * k_ * k_, spatial = oh * ow;
        Tensor dx({n, cin_, h, w});
        std::size_t chunks = (n + kChunk - 1) / kChunk;
        // Per-chunk weight-gradient partials are reduced in chunk order below.
        std::vector<Tensor> dws(chunks), dbs(chunks);
        parallel_for(chunks, [&](std::size_t ci) {
            std::size_t lo = ci * kChunk, hi_s = std::min(n, lo + kChunk), m = hi_s - lo;
            dvec cols(cols_rows * m * spatial), gbuf(cout_ * m * spatial),
                dcols(cols_rows * m * spatial);
            for (std::size_t i = 0; i < m; ++i) {
                detail::im2col_strided(x.data() + (lo + i) * cin_ * h * w, cin_, h, w, k_, s_, p_, oh, ow,
                                       cols.data() + i * spatial, m * spatial);
                const double* gi = g.data() + (lo + i) * cout_ * spatial;
                for (std::size_t c = 0; c < cout_; ++c)
                    std::copy(gi + c * spatial, gi + (c + 1) * spatial, gbuf.data() + c * m * spatial + i * spatial);
            }
            ECMap gm(gbuf.data(), cout_, m * spatial);
            dws[ci] = Tensor({cout_, cols_rows});
            as_matrix(dws[ci], cout_, cols_rows).noalias() = gm * ECMap(cols.data(), cols_rows, m * spatial).transpose();
            dbs[ci] = Tensor({cout_});
            for (std::size_t c = 0; c < cout_; ++c) dbs[ci][c] = gm.row(c).sum();
            EMap(dcols.data(), cols_rows, m * spatial).noalias() = as_matrix(w_, cout_, cols_rows).transpose() * gm;
            for (std::size_t i = 0; i < m; ++i) {
                dvec one(cols_rows * spatial);
                for (std::size_t r = 0; r < cols_rows; ++r)
                    std::copy(dcols.data() + r * m * spatial + i * spatial,
                              dcols.data() + r * m * spatial + (i + 1) * spatial, one.data() + r * spatial);
                detail::col2im_add(one.data(), cin_, h, w, k_, s_, p_, oh, ow, dx.data() + (lo + i) * cin_ * h * w);
            }
        });
        for (std::size_t ci = 0; ci < chunks; ++ci) {
            for (std::size_t j = 0; j < dw_.size(); ++j) dw_[j] += dws[ci][j];
            for (std::size_t c = 0; c < cout_; ++c) db_[c] += dbs[ci][c];
        }
        return dx;
    }

    std::vector<ParamRef> params() override {
        return {{name_ + ".weight", &w_, &dw_}, {name_ + ".bias", &b_, &db_}};
    }

    void init(Rng& rng) override {
        double lim = detail::glorot_limit(cin_ * k_ * k_, cout_ * k_ * k_);
        for (std::size_t i = 0; i < w_.size(); ++i) w_[i] = rng.uniform(-lim, lim);
        std::fill(b_.raw().begin(), b_.raw().end(), 0.0);
    }

private:
    std::size_t cin_, cout_, k_, s_, p_;
    Tensor w_, b_, dw_, db_;
};

class ConvTranspose2d final : public Layer {
public:
    ConvTranspose2d(std::string name, std::size_t cin, std::size_t cout, std::size_t k, std::size_t stride,
                    std::size_t pad, std::size_t out_pad)
        : Layer(std::move(name)),
          cin_(cin),
          cout_(cout),
          k_(k),
          s_(stride),
          p_(pad),
          op_(out_pad),
          w_({cin, cout, k, k}),
          b_({cout}),
          dw_({cin, cout, k, k}),
          db_({cout}) {
        if (op_ >= s_) throw std::invalid_argument(name_ + ": output padding must be < stride");
    }

    std::string kind() const override { return "conv_transpose2d"; }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        if (in.size() != 3 || in[0] != cin_)
            throw std::invalid_argument(name_ + ": conv_transpose2d expects [" + std::to_string(cin_) + ",H,W]");
        std::size_t oh = (in[1] - 1) * s_ + k_ + op_;
        std::size_t ow = (in[2] - 1) * s_ + k_ + op_;
        if (oh < 2 * p_ || ow < 2 * p_) throw std::invalid_argument(name_ + ": padding exceeds output");
        return {cout_, oh - 2 * p_, ow - 2 * p_};
    }

    static constexpr std::size_t kChunk = 16;  // same fixed chunking as Conv2d

    Tensor forward(const Tensor& x, Mode, LayerCache& cache, Rng*) override {
        std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
        auto os = output_shape({x.dim(1), h, w});
        std::size_t oh = os[1], ow = os[2], m_rows = cout_ * k_ * k_, spatial = h * w;
        cache.input = x;
        Tensor y({n, cout_, oh, ow});
        std::size_t chunks = (n + kChunk - 1) / kChunk;
        parallel_for(chunks, [&](std::size_t ci) {
            std::size_t lo = ci * kChunk, hi_s = std::min(n, lo + kChunk), m = hi_s - lo;
            dvec xbuf(cin_ * m * spatial), cols(m_rows * m * spatial);
            for (std::size_t i = 0; i < m; ++i) {
                const double* xi = x.data() + (lo + i) * cin_ * spatial;
                for (std::size_t c = 0; c < cin_; ++c)
                    std::copy(xi + c * spatial, xi + (c + 1) * spatial, xbuf.data() + c * m * spatial + i * spatial);
            }
            EMap(cols.data(), m_rows, m * spatial).noalias() =
                as_matrix(w_, cin_, m_rows).transpose() * ECMap(xbuf.data(), cin_, m * spatial);
            dvec one(m_rows * spatial);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t r = 0; r < m_rows; ++r)
                    std::copy(cols.data() + r * m * spatial + i * spatial,
                              cols.data() + r * m * spatial + (i + 1) * spatial, one.data() + r * spatial);
                double* yi = y.data() + (lo + i) * cout_ * oh * ow;
                detail::col2im_add(one.data(), cout_, oh, ow, k_, s_, p_, h, w, yi);
                for (std::size_t c = 0; c < cout_; ++c)
                    for (std::size_t q = 0; q < oh * ow; ++q) yi[c * oh * ow + q] += b_[c];
            }
        });
        return y;
    }

    Tensor backward(const Tensor& g, const LayerCache& cache) override {
        const Tensor& x = cache.input;
        std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
        std::size_t oh = g.dim(2), ow = g.dim(3), m_rows = cout_ * k_ * k_, spatial = h * w;
        Tensor dx({n, cin_, h, w});
        std::size_t chunks = (n + kChunk - 1) / kChunk;
        std::vector<Tensor> dws(chunks), dbs(chunks);
        parallel_for(chunks, [&](std::size_t ci) {
            std::size_t lo = ci * kChunk, hi_s = std::min(n, lo + kChunk), m = hi_s - lo;
            dvec dcols(m_rows * m * spatial), xbuf(cin_ * m * spatial), dxbuf(cin_ * m * spatial);
            dbs[ci] = Tensor({cout_});
            for (std::size_t i = 0; i < m; ++i) {
                const double* gi = g.data() + (lo + i) * cout_ * oh * ow;
                detail::im2col_strided(gi, cout_, oh, ow, k_, s_, p_, h, w, dcols.data() + i * spatial, m * spatial);
                const double* xi = x.data() + (lo + i) * cin_ * spatial;
                for (std::size_t c = 0; c < cin_; ++c)
                    std::copy(xi + c * spatial, xi + (c + 1) * spatial, xbuf.data() + c * m * spatial + i * spatial);
                for (std::size_t c = 0; c < cout_; ++c) {
                    double s = 0.0;
                    for (std::size_t q = 0; q < oh * ow; ++q) s += gi[c * oh * ow + q];
                    dbs[ci][c] += s;
                }
            }
            ECMap dc(dcols.data(), m_rows, m * spatial);
            EMap(dxbuf.data(), cin_, m * spatial).noalias() = as_matrix(w_, cin_, m_rows) * dc;
            dws[ci] = Tensor({cin_, m_rows});
            as_matrix(dws[ci], cin_, m_rows).noalias() = ECMap(xbuf.data(), cin_, m * spatial) * dc.transpose();
            for (std::size_t i = 0; i < m; ++i) {
                double* dxi = dx.data() + (lo + i) * cin_ * spatial;
                for (std::size_t c = 0; c < cin_; ++c)
                    std::copy(dxbuf.data() + c * m * spatial + i * spatial,
                              dxbuf.data() + c * m * spatial + (i + 1) * spatial, dxi + c * spatial);
            }
        });
        for (std::size_t ci = 0; ci < chunks; ++ci) {
            for (std::size_t j = 0; j < dw_.size(); ++j) dw_[j] += dws[ci][j];
            for (std::size_t c = 0; c < cout_; ++c) db_[c] += dbs[ci][c];
        }
        return dx;
    }

    std::vector<ParamRef> params() override {
        return {{name_ + ".weight", &w_, &dw_}, {name_ + ".bias", &b_, &db_}};
    }

    void init(Rng& rng) override {
        double lim = detail::glorot_limit(cin_ * k_ * k_, cout_ * k_ * k_);
        for (std::size_t i = 0; i < w_.size(); ++i) w_[i] = rng.uniform(-lim, lim);
        std::fill(b_.raw().begin(), b_.raw().end(), 0.0);
    }

private:
    std::size_t cin_, cout_, k_, s_, p_, op_;
    Tensor w_, b_, dw_, db_;
};

/// 2x2 max pooling, stride 2. Ties resolve to the first element in scan
/// order, which keeps backward deterministic.
class MaxPool2 final : public Layer {
public:
    explicit MaxPool2(std::string name) : Layer(std::move(name)) {}

    std::string kind() const override { return "maxpool2"; }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        if (in.size() != 3 || in[1] % 2 != 0 || in[2] % 2 != 0)
            throw std::invalid_argument(name_ + ": maxpool2 expects [C,even,even]");
        return {in[0], in[1] / 2, in[2] / 2};
    }

    Tensor forward(const Tensor& x, Mode, LayerCache& cache, Rng*) override {
        std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
        std::size_t oh = h / 2, ow = w / 2;
        Tensor y({n, c, oh, ow});
        cache.input = Tensor({4}, {double(n), double(c), double(h), double(w)});
        cache.idx.assign(n * c * oh * ow, 0);
        parallel_for(n * c, [&](std::size_t nc) {
            const double* xp = x.data() + nc * h * w;
            double* yp = y.data() + nc * oh * ow;
            std::uint32_t* ip = cache.idx.data() + nc * oh * ow;
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    std::size_t best = (2 * oy) * w + 2 * ox;
                    double bv = xp[best];
                    const std::size_t cand[3] = {(2 * oy) * w + 2 * ox + 1, (2 * oy + 1) * w + 2 * ox,
                                                 (2 * oy + 1) * w + 2 * ox + 1};
                    for (std::size_t q : cand)
                        if (xp[q] > bv) { bv = xp[q]; best = q; }
                    yp[oy * ow + ox] = bv;
                    ip[oy * ow + ox] = static_cast<std::uint32_t>(best);
                }
        });
        return y;
    }

    Tensor backward(const Tensor& g, const LayerCache& cache) override {
        std::size_t n = static_cast<std::size_t>(cache.input[0]), c = static_cast<std::size_t>(cache.input[1]);
        std::size_t h = static_cast<std::size_t>(cache.input[2]), w = static_cast<std::size_t>(cache.input[3]);
        std::size_t oh = h / 2, ow = w / 2;
        Tensor dx({n, c, h, w});
        parallel_for(n * c, [&](std::size_t nc) {
            const double* gp = g.data() + nc * oh * ow;
            const std::uint32_t* ip = cache.idx.data() + nc * oh * ow;
            double* dp = dx.data() + nc * h * w;
            for (std::size_t q = 0; q < oh * ow; ++q) dp[ip[q]] += gp[q];
        });
        return dx;
    }
};

class Relu final : public Layer {
public:
    explicit Relu(std::string name) : Layer(std::move(name)) {}
    std::string kind() const override { return "relu"; }
    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override { return in; }

    Tensor forward(const Tensor& x, Mode, LayerCache& cache, Rng*) override {
        cache.input = x;
        Tensor y = x;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (y[i] < 0.0) y[i] = 0.0;
        return y;
    }

    // Subgradient at 0 is 0: strictly positive inputs pass gradient.
    Tensor backward(const Tensor& g, const LayerCache& cache) override {
        Tensor dx = g;
        for (std::size_t i = 0; i < dx.size(); ++i)
            if (cache.input[i] <= 0.0) dx[i] = 0.0;
        return dx;
    }
};

class TanhLayer final : public Layer {
public:
    explicit TanhLayer(std::string name) : Layer(std::move(name)) {}
    std::string kind() const override { return "tanh"; }
    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override { return in; }

    Tensor forward(const Tensor& x, Mode, LayerCache& cache, Rng*) override {
        Tensor y = x;
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(y[i]);
        cache.a = y;
        return y;
    }

    Tensor backward(const Tensor& g, const LayerCache& cache) override {
        Tensor dx = g;
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= 1.0 - cache.a[i] * cache.a[i];
        return dx;
    }
};

class SigmoidLayer final : public Layer {
public:
    explicit SigmoidLayer(std::string name) : Layer(std::move(name)) {}
    std::string kind() const override { return "sigmoid"; }
    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override { return in; }

    Tensor forward(const Tensor& x, Mode, LayerCache& cache, Rng*) override {
        Tensor y = x;
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = stable_sigmoid(y[i]);
        cache.a = y;
        return y;
    }

    Tensor backward(const Tensor& g, const LayerCache& cache) override {
        Tensor dx = g;
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= cache.a[i] * (1.0 - cache.a[i]);
        return dx;
    }
};

/// Row-wise softmax over [N, D].
class Softmax final : public Layer {
public:
    explicit Softmax(std::string name) : Layer(std::move(name)) {}
    std::string kind() const override { return "softmax"; }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        if (in.size() != 1) throw std::invalid_argument(name_ + ": softmax expects [D]");
        return in;
    }

    Tensor forward(const Tensor& x, Mode, LayerCache& cache, Rng*) override {
        std::size_t n = x.dim(0), d = x.dim(1);
        Tensor y = x;
        for (std::size_t i = 0; i < n; ++i) {
            double* row = y.data() + i * d;
            double mx = row[0];
            for (std::size_t j = 1; j < d; ++j) mx = std::max(mx, row[j]);
            double z = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                row[j] = std::exp(row[j] - mx);
                z += row[j];
            }
            for (std::size_t j = 0; j < d; ++j) row[j] /= z;
        }
        cache.a = y;
        return y;
    }

    Tensor backward(const Tensor& g, const LayerCache& cache) override {
        std::size_t n = g.dim(0), d = g.dim(1);
        Tensor dx = g;
        for (std::size_t i = 0; i < n; ++i) {
            const double* p = cache.a.data() + i * d;
            double* gr = dx.data() + i * d;
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += gr[j] * p[j];
            for (std::size_t j = 0; j < d; ++j) gr[j] = p[j] * (gr[j] - dot);
        }
        return dx;
    }
};

/// Batch normalization over the batch (dense) or batch+spatial (conv) axes.
/// Running statistics are state, not parameters: they update only in
/// Mode::train and are untouched by train_frozen and eval.
class BatchNorm final : public Layer {
public:
    BatchNorm(std::string name, std::size_t features, double momentum = 0.1, double eps = 1e-5)
        : Layer(std::move(name)),
          c_(features),
          momentum_(momentum),
          eps_(eps),
          gamma_(Tensor::full({features}, 1.0)),
          beta_({features}),
          dgamma_({features}),
          dbeta_({features}),
          running_mean_({features}),
          running_var_(Tensor::full({features}, 1.0)) {}

    std::string kind() const override { return "batchnorm"; }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        std::size_t ch = in.size() == 1 ? in[0] : in.size() == 3 ? in[0] : 0;
        if (ch != c_)
            throw std::invalid_argument(name_ + ": batchnorm expects " + std::to_string(c_) + " features/channels");
        return in;
    }

    Tensor forward(const Tensor& x, Mode mode, LayerCache& cache, Rng*) override {
        std::size_t n = x.dim(0);
        std::size_t spatial = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
        std::size_t m = n * spatial;
        Tensor y = x;
        if (mode == Mode::eval) {
            for_each_channel(y, n, spatial, [&](std::size_t c, double* v, std::size_t) {
                double inv = 1.0 / std::sqrt(running_var_[c] + eps_);
                for (std::size_t q = 0; q < spatial; ++q) v[q] = gamma_[c] * ((v[q] - running_mean_[c]) * inv) + beta_[c];
            });
            return y;
        }
        Tensor mean_c({c_}), var_c({c_});
        accumulate_stats(x, n, spatial, mean_c, var_c);
        cache.a = x;  // normalized in place below
        cache.b = Tensor({2 * c_});
        Tensor& xhat = cache.a;
        for (std::size_t c = 0; c < c_; ++c) {
            double inv = 1.0 / std::sqrt(var_c[c] + eps_);
            cache.b[c] = inv;
            cache.b[c_ + c] = mean_c[c];
        }
        for_each_channel(xhat, n, spatial, [&](std::size_t c, double* v, std::size_t) {
            double inv = cache.b[c];
            for (std::size_t q = 0; q < spatial; ++q) v[q] = (v[q] - cache.b[c_ + c]) * inv;
        });
        for_each_channel(y, n, spatial, [&](std::size_t c, double* v, std::size_t i) {
            const double* xh = xhat.data() + (i * c_ + c) * spatial;
            for (std::size_t q = 0; q < spatial; ++q) v[q] = gamma_[c] * xh[q] + beta_[c];
        });
        if (mode == Mode::train) {
            double unbias = m > 1 ? static_cast<double>(m) / static_cast<double>(m - 1) : 1.0;
            for (std::size_t c = 0; c < c_; ++c) {
                running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mean_c[c];
                running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * var_c[c] * unbias;
            }
        }
        return y;
    }

    Tensor backward(const Tensor& g, const LayerCache& cache) override {
        std::size_t n = g.dim(0);
        std::size_t spatial = g.rank() == 4 ? g.dim(2) * g.dim(3) : 1;
        double m = static_cast<double>(n * spatial);
        const Tensor& xhat = cache.a;
        Tensor dx = g;
        for (std::size_t c = 0; c < c_; ++c) {
            double sum_g = 0.0, sum_gx = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double* gp = g.data() + (i * c_ + c) * spatial;
                const double* xp = xhat.data() + (i * c_ + c) * spatial;
                for (std::size_t q = 0; q < spatial; ++q) {
                    sum_g += gp[q];
                    sum_gx += gp[q] * xp[q];
                }
            }
            dbeta_[c] += sum_g;
            dgamma_[c] += sum_gx;
            double inv = cache.b[c];
            double scale = gamma_[c] * inv / m;
            for (std::size_t i = 0; i < n; ++i) {
                double* dp = dx.data() + (i * c_ + c) * spatial;
                const double* gp = g.data() + (i * c_ + c) * spatial;
                const double* xp = xhat.data() + (i * c_ + c) * spatial;
                for (std::size_t q = 0; q < spatial; ++q) dp[q] = scale * (m * gp[q] - sum_g - xp[q] * sum_gx);
            }
        }
        return dx;
    }

    std::vector<ParamRef> params() override {
        return {{name_ + ".gamma", &gamma_, &dgamma_}, {name_ + ".beta", &beta_, &dbeta_}};
    }

    std::vector<ParamRef> state() override {
        return {{name_ + ".running_mean", &running_mean_, nullptr}, {name_ + ".running_var", &running_var_, nullptr}};
    }

private:
    template <typename Fn>
    void for_each_channel(Tensor& t, std::size_t n, std::size_t spatial, Fn&& fn) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < c_; ++c) fn(c, t.data() + (i * c_ + c) * spatial, i);
    }

    void accumulate_stats(const Tensor& x, std::size_t n, std::size_t spatial, Tensor& mean_c, Tensor& var_c) const {
        double m = static_cast<double>(n * spatial);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < c_; ++c) {
                const double* v = x.data() + (i * c_ + c) * spatial;
                for (std::size_t q = 0; q < spatial; ++q) mean_c[c] += v[q];
            }
        for (std::size_t c = 0; c < c_; ++c) mean_c[c] /= m;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < c_; ++c) {
                const double* v = x.data() + (i * c_ + c) * spatial;
                for (std::size_t q = 0; q < spatial; ++q) {
                    double d = v[q] - mean_c[c];
                    var_c[c] += d * d;
                }
            }
        for (std::size_t c = 0; c < c_; ++c) var_c[c] /= m;
    }

    std::size_t c_;
    double momentum_, eps_;
    Tensor gamma_, beta_, dgamma_, dbeta_;
    Tensor running_mean_, running_var_;
};

/// Inverted dropout; identity in eval mode.
class Dropout final : public Layer {
public:
    Dropout(std::string name, double p) : Layer(std::move(name)), p_(p) {
        if (p < 0.0 || p >= 1.0) throw std::invalid_argument(name_ + ": dropout rate must be in [0,1)");
    }

    std::string kind() const override { return "dropout"; }
    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override { return in; }

    Tensor forward(const Tensor& x, Mode mode, LayerCache& cache, Rng* rng) override {
        if (mode == Mode::eval || p_ == 0.0) {
            cache.a = Tensor();
            return x;
        }
        if (!rng) throw std::logic_error(name_ + ": dropout needs an rng in train mode");
        double keep = 1.0 - p_;
        cache.a = Tensor(x.shape());
        Tensor y = x;
        for (std::size_t i = 0; i < y.size(); ++i) {
            double m = rng->bernoulli(keep) ? 1.0 / keep : 0.0;
            cache.a[i] = m;
            y[i] *= m;
        }
        return y;
    }

    Tensor backward(const Tensor& g, const LayerCache& cache) override {
        if (cache.a.size() == 0) return g;
        Tensor dx = g;
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= cache.a[i];
        return dx;
    }

private:
    double p_;
};

/// Additive input noise; identity in eval mode and for the gradient.
class GaussianNoise final : public Layer {
public:
    GaussianNoise(std::string name, double sigma) : Layer(std::move(name)), sigma_(sigma) {}
    std::string kind() const override { return "gaussian_noise"; }
    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override { return in; }

    Tensor forward(const Tensor& x, Mode mode, LayerCache&, Rng* rng) override {
        if (mode == Mode::eval || sigma_ == 0.0) return x;
        if (!rng) throw std::logic_error(name_ + ": gaussian noise needs an rng in train mode");
        Tensor y = x;
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += sigma_ * rng->normal();
        return y;
    }

    Tensor backward(const Tensor& g, const LayerCache&) override { return g; }

private:
    double sigma_;
};

class Flatten final : public Layer {
public:
    explicit Flatten(std::string name) : Layer(std::move(name)) {}
    std::string kind() const override { return "flatten"; }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        std::size_t n = 1;
        for (std::size_t d : in) n *= d;
        return {n};
    }

    Tensor forward(const Tensor& x, Mode, LayerCache& cache, Rng*) override {
        cache.idx.assign(x.shape().begin() + 1, x.shape().end());
        return x.reshaped({x.dim(0), x.size() / x.dim(0)});
    }

    Tensor backward(const Tensor& g, const LayerCache& cache) override {
        std::vector<std::size_t> shape{g.dim(0)};
        shape.insert(shape.end(), cache.idx.begin(), cache.idx.end());
        return g.reshaped(shape);
    }
};

class Reshape final : public Layer {
public:
    Reshape(std::string name, std::vector<std::size_t> target) : Layer(std::move(name)), target_(std::move(target)) {}
    std::string kind() const override { return "reshape"; }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        std::size_t a = 1, b = 1;
        for (std::size_t d : in) a *= d;
        for (std::size_t d : target_) b *= d;
        if (a != b) throw std::invalid_argument(name_ + ": reshape element count mismatch");
        return target_;
    }

    Tensor forward(const Tensor& x, Mode, LayerCache& cache, Rng*) override {
        cache.idx.assign(x.shape().begin() + 1, x.shape().end());
        std::vector<std::size_t> shape{x.dim(0)};
        shape.insert(shape.end(), target_.begin(), target_.end());
        return x.reshaped(shape);
    }

    Tensor backward(const Tensor& g, const LayerCache& cache) override {
        std::vector<std::size_t> shape{g.dim(0)};
        shape.insert(shape.end(), cache.idx.begin(), cache.idx.end());
        return g.reshaped(shape);
    }

private:
    std::vector<std::size_t> target_;
};

/// Ordered stack of layers with shape validation at construction time.
class Graph {
public:
    Graph() = default;
    explicit Graph(std::vector<std::size_t> input_shape) : input_shape_(std::move(input_shape)) {}

    Graph& add(std::unique_ptr<Layer> layer) {
        if (layer->name().empty()) layer->rename("l" + std::to_string(layers_.size()) + "_" + layer->kind());
        current_shape_ = layer->output_shape(current_shape_.empty() ? input_shape_ : current_shape_);
        layers_.push_back(std::move(layer));
        return *this;
    }

    const std::vector<std::size_t>& input_shape() const { return input_shape_; }

    std::vector<std::size_t> output_shape() const {
        return layers_.empty() ? input_shape_ : current_shape_;
    }

    std::size_t layer_count() const { return layers_.size(); }
    const Layer& layer(std::size_t i) const { return *layers_.at(i); }

    bool has_kind(const std::string& kind) const {
        for (const auto& l : layers_)
            if (l->kind() == kind) return true;
        return false;
    }

    Tensor forward(const Tensor& x, Mode mode, Tape& tape, Rng* rng = nullptr) {
        check_input(x);
        tape.entries.assign(layers_.size(), LayerCache{});
        Tensor h = x;
        for (std::size_t i = 0; i < layers_.size(); ++i) h = layers_[i]->forward(h, mode, tape.entries[i], rng);
        ensure_finite(h, "forward pass");
        tape.valid = true;
        return h;
    }

    Tensor forward(const Tensor& x, Mode mode, Rng* rng = nullptr) { return forward(x, mode, last_tape_, rng); }

    /// Returns the gradient with respect to the input; parameter gradients
    /// accumulate into each layer and are read back via gradients().
    Tensor backward(const Tensor& upstream, const Tape& tape) {
        if (!tape.valid) throw std::logic_error("backward called without a cached forward pass");
        Tensor g = upstream;
        for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g, tape.entries[i]);
        ensure_finite(g, "backward pass");
        return g;
    }

    Tensor backward(const Tensor& upstream) { return backward(upstream, last_tape_); }

    std::vector<ParamRef> params() {
        std::vector<ParamRef> out;
        for (auto& l : layers_)
            for (auto& p : l->params()) out.push_back(p);
        return out;
    }

    std::vector<ParamRef> state() {
        std::vector<ParamRef> out;
        for (auto& l : layers_)
            for (auto& p : l->state()) out.push_back(p);
        return out;
    }

    std::map<std::string, Tensor> gradients() {
        std::map<std::string, Tensor> out;
        for (auto& p : params()) out.emplace(p.name, *p.grad);
        return out;
    }

    void zero_grads() {
        for (auto& p : params()) std::fill(p.grad->raw().begin(), p.grad->raw().end(), 0.0);
    }

    void init(Rng& rng) {
        for (auto& l : layers_) l->init(rng);
    }

private:
    void check_input(const Tensor& x) const {
        bool ok = x.rank() == input_shape_.size() + 1;
        for (std::size_t i = 0; ok && i < input_shape_.size(); ++i) ok = x.dim(i + 1) == input_shape_[i];
        if (!ok) {
            std::string want = "[N";
            for (std::size_t d : input_shape_) want += "," + std::to_string(d);
            throw std::invalid_argument("graph input " + x.shape_string() + " does not match " + want + "]");
        }
    }

    std::vector<std::size_t> input_shape_;
    std::vector<std::size_t> current_shape_;
    std::vector<std::unique_ptr<Layer>> layers_;
    Tape last_tape_;
};

// Factory helpers so builders read as a layer list.
inline std::unique_ptr<Layer> dense(std::string name, std::size_t in, std::size_t out) {
    return std::make_unique<Dense>(std::move(name), in, out);
}
inline std::unique_ptr<Layer> conv2d(std::string name, std::size_t cin, std::size_t cout, std::size_t k = 5,
                                     std::size_t stride = 1, std::size_t pad = 2) {
    return std::make_unique<Conv2d>(std::move(name), cin, cout, k, stride, pad);
}
inline std::unique_ptr<Layer> conv_transpose2d(std::string name, std::size_t cin, std::size_t cout, std::size_t k = 5,
                                               std::size_t stride = 2, std::size_t pad = 2, std::size_t out_pad = 1) {
    return std::make_unique<ConvTranspose2d>(std::move(name), cin, cout, k, stride, pad, out_pad);
}
inline std::unique_ptr<Layer> maxpool2() { return std::make_unique<MaxPool2>(""); }
inline std::unique_ptr<Layer> relu() { return std::make_unique<Relu>(""); }
inline std::unique_ptr<Layer> tanh_layer() { return std::make_unique<TanhLayer>(""); }
inline std::unique_ptr<Layer> sigmoid_layer() { return std::make_unique<SigmoidLayer>(""); }
inline std::unique_ptr<Layer> softmax() { return std::make_unique<Softmax>(""); }
inline std::unique_ptr<Layer> batchnorm(std::string name, std::size_t features) {
    return std::make_unique<BatchNorm>(std::move(name), features);
}
inline std::unique_ptr<Layer> dropout(double p) { return std::make_unique<Dropout>("", p); }
inline std::unique_ptr<Layer> gaussian_noise(double sigma) { return std::make_unique<GaussianNoise>("", sigma); }
inline std::unique_ptr<Layer> flatten() { return std::make_unique<Flatten>(""); }
inline std::unique_ptr<Layer> reshape(std::vector<std::size_t> target) {
    return std::make_unique<Reshape>("", std::move(target));
}

}  // namespace vgf

#endif  // VGF_GRAPH_HPP
