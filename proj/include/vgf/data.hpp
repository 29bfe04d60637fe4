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

#ifndef VGF_DATA_HPP
#define VGF_DATA_HPP

#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "vgf/errors.hpp"
#include "vgf/rng.hpp"
#include "vgf/tensor.hpp"

namespace vgf {

/// Images in [0,1], shape [n, C, H, W]; labels optional.
struct Dataset {
    Tensor images;
    std::vector<int> labels;

    std::size_t count() const { return images.dim(0); }
    bool has_labels() const { return !labels.empty(); }

    std::vector<std::size_t> sample_shape() const {
        return std::vector<std::size_t>(images.shape().begin() + 1, images.shape().end());
    }

    std::size_t sample_size() const { return images.size() / count(); }
};

namespace detail {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

inline std::uint32_t read_be32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw IoError("idx: truncated header in " + path);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

inline void write_be32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace detail

/// Parses the big-endian IDX container: magic 0x803 for unsigned-byte images
/// (count, rows, cols), 0x801 for labels. Pixels are scaled by 1/255.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path = "") {
    std::ifstream is(images_path, std::ios::binary);
    if (!is) throw IoError("idx: cannot open " + images_path);
    if (detail::read_be32(is, images_path) != detail::kIdxImagesMagic)
        throw IoError("idx: bad magic in " + images_path);
    std::size_t n = detail::read_be32(is, images_path);
    std::size_t h = detail::read_be32(is, images_path);
    std::size_t w = detail::read_be32(is, images_path);

    std::vector<unsigned char> bytes(n * h * w);
    is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!is) throw IoError("idx: truncated image data in " + images_path);

    Dataset ds;
    ds.images = Tensor({n, 1, h, w});
    for (std::size_t i = 0; i < bytes.size(); ++i) ds.images[i] = static_cast<double>(bytes[i]) / 255.0;

    if (!labels_path.empty()) {
        std::ifstream ls(labels_path, std::ios::binary);
        if (!ls) throw IoError("idx: cannot open " + labels_path);
        if (detail::read_be32(ls, labels_path) != detail::kIdxLabelsMagic)
            throw IoError("idx: bad magic in " + labels_path);
        std::size_t ln = detail::read_be32(ls, labels_path);
        if (ln != n)
            throw IoError("idx: label count " + std::to_string(ln) + " does not match image count " +
                                     std::to_string(n));
        std::vector<unsigned char> lab(ln);
        ls.read(reinterpret_cast<char*>(lab.data()), static_cast<std::streamsize>(ln));
        if (!ls) throw IoError("idx: truncated label data in " + labels_path);
        ds.labels.assign(lab.begin(), lab.end());
    }
    return ds;
}

/// Writes the dataset back out in IDX form, quantizing pixels to bytes.
/// Byte-valued inputs (anything previously loaded from IDX) round-trip
/// bit-exactly.
inline void save_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path = "") {
    if (ds.images.rank() != 4 || ds.images.dim(1) != 1)
        throw std::invalid_argument("idx: only single-channel [n,1,H,W] datasets are writable");
    std::ofstream os(images_path, std::ios::binary);
    if (!os) throw IoError("idx: cannot open " + images_path + " for writing");
    detail::write_be32(os, detail::kIdxImagesMagic);
    detail::write_be32(os, static_cast<std::uint32_t>(ds.count()));
    detail::write_be32(os, static_cast<std::uint32_t>(ds.images.dim(2)));
    detail::write_be32(os, static_cast<std::uint32_t>(ds.images.dim(3)));
    for (std::size_t i = 0; i < ds.images.size(); ++i) {
        double v = std::min(1.0, std::max(0.0, ds.images[i]));
        unsigned char b = static_cast<unsigned char>(std::lround(v * 255.0));
        os.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!os) throw IoError("idx: write failed for " + images_path);

    if (!labels_path.empty()) {
        if (!ds.has_labels()) throw std::invalid_argument("idx: dataset has no labels to write");
        std::ofstream ls(labels_path, std::ios::binary);
        if (!ls) throw IoError("idx: cannot open " + labels_path + " for writing");
        detail::write_be32(ls, detail::kIdxLabelsMagic);
        detail::write_be32(ls, static_cast<std::uint32_t>(ds.labels.size()));
        for (int l : ds.labels) {
            unsigned char b = static_cast<unsigned char>(l);
            ls.write(reinterpret_cast<const char*>(&b), 1);
        }
        if (!ls) throw IoError("idx: write failed for " + labels_path);
    }
}

enum class SynthKind { ring_mixture, grid_mixture };

struct SynthSpec {
    SynthKind kind = SynthKind::ring_mixture;
    std::size_t modes = 8;
    double sigma = 0.05;
    std::size_t n = 1000;
};

inline std::vector<std::array<double, 2>> synth_mode_centers(const SynthSpec& spec) {
    if (spec.modes < 1) throw std::invalid_argument("synth: modes must be >= 1");
    std::vector<std::array<double, 2>> centers;
    if (spec.kind == SynthKind::ring_mixture) {
        for (std::size_t k = 0; k < spec.modes; ++k) {
            double a = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(spec.modes);
            centers.push_back({std::cos(a), std::sin(a)});
        }
    } else {
        std::size_t side = 1;
        while (side * side < spec.modes) ++side;
        for (std::size_t k = 0; k < spec.modes; ++k) {
            std::size_t i = k / side, j = k % side;
            auto coord = [side](std::size_t q) {
                return side == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(q) / static_cast<double>(side - 1);
            };
            centers.push_back({coord(j), coord(i)});
        }
    }
    return centers;
}

/// Gaussian mixture samples stored as [n,1,1,2] "images"; labels carry the
/// mode index. Per point: one mode draw, then two normals.
inline Dataset synth(const SynthSpec& spec, Rng& rng) {
    if (spec.sigma <= 0.0) throw std::invalid_argument("synth: sigma must be positive");
    auto centers = synth_mode_centers(spec);
    Dataset ds;
    ds.images = Tensor({spec.n, 1, 1, 2});
    ds.labels.resize(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        std::size_t mode = rng.integer(spec.modes);
        ds.labels[i] = static_cast<int>(mode);
        ds.images[i * 2] = centers[mode][0] + spec.sigma * rng.normal();
        ds.images[i * 2 + 1] = centers[mode][1] + spec.sigma * rng.normal();
    }
    ensure_finite(ds.images, "synthetic dataset");
    return ds;
}

inline void write_points_csv(const Dataset& ds, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("csv: cannot open " + path + " for writing");
    os << (ds.has_labels() ? "x,y,label\n" : "x,y\n");
    char buf[64];
    for (std::size_t i = 0; i < ds.count(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", ds.images[i * 2], ds.images[i * 2 + 1]);
        os << buf;
        if (ds.has_labels()) os << ',' << ds.labels[i];
        os << '\n';
    }
}

/// One shuffled pass over n indices in batches of exactly `batch`; a short
/// final batch is dropped.
inline std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch, Rng& rng) {
    if (batch < 1 || batch > n) throw std::invalid_argument("minibatches: need 1 <= batch <= dataset size");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start + batch <= n; start += batch)
        out.emplace_back(order.begin() + start, order.begin() + start + batch);
    return out;
}

/// Endless batch supply; reshuffles at every pass boundary using the rng it
/// is handed at that moment.
class BatchStream {
public:
    BatchStream(std::size_t n, std::size_t batch) : n_(n), batch_(batch) {
        if (batch < 1 || batch > n) throw std::invalid_argument("minibatches: need 1 <= batch <= dataset size");
    }

    const std::vector<std::size_t>& next(Rng& rng) {
        if (pos_ >= pass_.size()) {
            pass_ = epoch_batches(n_, batch_, rng);
            pos_ = 0;
        }
        return pass_[pos_++];
    }

    std::size_t batches_per_pass() const { return n_ / batch_; }

private:
    std::size_t n_, batch_;
    std::vector<std::vector<std::size_t>> pass_;
    std::size_t pos_ = 0;
};

inline Tensor gather(const Tensor& images, const std::vector<std::size_t>& idx) {
    std::size_t per = images.size() / images.dim(0);
    std::vector<std::size_t> shape = images.shape();
    shape[0] = idx.size();
    Tensor out(shape);
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::copy(images.data() + idx[i] * per, images.data() + (idx[i] + 1) * per, out.data() + i * per);
    return out;
}

inline std::vector<int> gather_labels(const std::vector<int>& labels, const std::vector<std::size_t>& idx) {
    std::vector<int> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = labels[idx[i]];
    return out;
}

inline Dataset slice(const Dataset& ds, std::size_t start, std::size_t count) {
    if (start + count > ds.count()) throw std::out_of_range("dataset slice out of range");
    std::vector<std::size_t> idx(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = start + i;
    Dataset out;
    out.images = gather(ds.images, idx);
    if (ds.has_labels()) out.labels = gather_labels(ds.labels, idx);
    return out;
}

namespace detail {

struct Seg {
    double x1, y1, x2, y2;
};

// Stroke tables for the procedural glyphs, unit box, y pointing down.
inline const std::vector<std::vector<Seg>>& digit_strokes() {
    auto poly = [](std::initializer_list<double> pts, bool closed = false) {
        std::vector<Seg> segs;
        auto it = pts.begin();
        std::vector<std::pair<double, double>> p;
        while (it != pts.end()) {
            double x = *it++;
            double y = *it++;
            p.emplace_back(x, y);
        }
        for (std::size_t i = 0; i + 1 < p.size(); ++i)
            segs.push_back({p[i].first, p[i].second, p[i + 1].first, p[i + 1].second});
        if (closed && p.size() > 2) segs.push_back({p.back().first, p.back().second, p[0].first, p[0].second});
        return segs;
    };
    static const std::vector<std::vector<Seg>> table = [&] {
        std::vector<std::vector<Seg>> t(10);
        t[0] = poly({0.5, 0.15, 0.68, 0.25, 0.72, 0.5, 0.68, 0.75, 0.5, 0.85, 0.32, 0.75, 0.28, 0.5, 0.32, 0.25}, true);
        t[1] = poly({0.35, 0.3, 0.52, 0.15, 0.52, 0.85});
        t[2] = poly({0.28, 0.3, 0.4, 0.16, 0.62, 0.16, 0.72, 0.32, 0.28, 0.84, 0.74, 0.84});
        t[3] = poly({0.28, 0.2, 0.5, 0.15, 0.68, 0.3, 0.46, 0.48, 0.7, 0.66, 0.5, 0.85, 0.28, 0.79});
        t[4] = poly({0.64, 0.85, 0.64, 0.15, 0.28, 0.62, 0.76, 0.62});
        t[5] = poly({0.7, 0.16, 0.32, 0.16, 0.31, 0.46, 0.58, 0.44, 0.71, 0.62, 0.58, 0.83, 0.3, 0.82});
        t[6] = poly({0.64, 0.16, 0.42, 0.3, 0.32, 0.55, 0.36, 0.76, 0.54, 0.85, 0.67, 0.7, 0.6, 0.54, 0.36, 0.55});
        t[7] = poly({0.26, 0.16, 0.74, 0.16, 0.42, 0.85});
        t[8] = poly({0.5, 0.15, 0.66, 0.29, 0.5, 0.46, 0.34, 0.29}, true);
        auto lower = poly({0.5, 0.46, 0.69, 0.65, 0.5, 0.85, 0.31, 0.65}, true);
        t[8].insert(t[8].end(), lower.begin(), lower.end());
        t[9] = poly({0.37, 0.84, 0.59, 0.7, 0.68, 0.45, 0.64, 0.24, 0.47, 0.15, 0.34, 0.3, 0.41, 0.46, 0.65, 0.45});
        return t;
    }();
    return table;
}

inline double point_segment_dist(double px, double py, const Seg& s) {
    double vx = s.x2 - s.x1, vy = s.y2 - s.y1;
    double wx = px - s.x1, wy = py - s.y1;
    double vv = vx * vx + vy * vy;
    double t = vv > 0.0 ? std::min(1.0, std::max(0.0, (wx * vx + wy * vy) / vv)) : 0.0;
    double dx = px - (s.x1 + t * vx), dy = py - (s.y1 + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace detail

/// Deterministic 28x28 digit corpus: stroke glyphs under random rotation,
/// scale, translation and pixel noise. A stand-in with the same file formats
/// and label structure as scanned digits, generated entirely from the seed.
inline Dataset synth_digits(std::size_t n, Rng& rng) {
    const std::size_t hw = 28;
    Dataset ds;
    ds.images = Tensor({n, 1, hw, hw});
    ds.labels.resize(n);
    const auto& strokes = detail::digit_strokes();
    for (std::size_t i = 0; i < n; ++i) {
        int digit = static_cast<int>(rng.integer(10));
        ds.labels[i] = digit;
        double angle = rng.uniform(-0.35, 0.35);
        double scale = rng.uniform(0.75, 1.2);
        double tx = rng.uniform(-0.1, 0.1);
        double ty = rng.uniform(-0.1, 0.1);
        double shear = rng.uniform(-0.25, 0.25);
        double thickness = rng.uniform(0.040, 0.085);
        double noise_amp = rng.uniform(0.02, 0.12);

        // per-sample shape wobble: every stroke endpoint moves a little
        auto segs = strokes[static_cast<std::size_t>(digit)];
        for (auto& s : segs) {
            s.x1 += rng.uniform(-0.035, 0.035);
            s.y1 += rng.uniform(-0.035, 0.035);
            s.x2 += rng.uniform(-0.035, 0.035);
            s.y2 += rng.uniform(-0.035, 0.035);
        }

        double ca = std::cos(angle), sa = std::sin(angle);
        double* img = ds.images.data() + i * hw * hw;
        for (std::size_t py = 0; py < hw; ++py)
            for (std::size_t px = 0; px < hw; ++px) {
                // map pixel into glyph coordinates (inverse of the jitter)
                double ux = (static_cast<double>(px) + 0.5) / hw - 0.5 - tx;
                double uy = (static_cast<double>(py) + 0.5) / hw - 0.5 - ty;
                double rx = ca * ux + sa * uy;
                double ry = -sa * ux + ca * uy;
                double gx = (rx - shear * ry) / scale + 0.5;
                double gy = ry / scale + 0.5;
                double d = 1e9;
                for (const auto& s : segs) d = std::min(d, detail::point_segment_dist(gx, gy, s));
                double v = (thickness - d) / 0.035 + 0.5;
                img[py * hw + px] = std::min(1.0, std::max(0.0, v));
            }
        for (std::size_t q = 0; q < hw * hw; ++q) {
            double v = img[q] + noise_amp * (rng.uniform() - 0.5);
            img[q] = std::min(1.0, std::max(0.0, v));
        }
    }
    return ds;
}

}  // namespace vgf

#endif  // VGF_DATA_HPP
