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

#ifndef VGF_SEMISUP_HPP
#define VGF_SEMISUP_HPP

#include <functional>
#include <string>
#include <vector>

#include "vgf/adadelta.hpp"
#include "vgf/config.hpp"
#include "vgf/data.hpp"
#include "vgf/generator.hpp"
#include "vgf/training.hpp"

namespace vgf {

/// Softmax classifier with the regularizers dialed in by config: dropout and
/// additive input noise, batch normalization on the trunk.
struct Classifier {
    Graph net;
    std::size_t num_classes = 0;

    Classifier() = default;
    Classifier(Graph g, std::size_t classes) : net(std::move(g)), num_classes(classes) {}

    std::vector<ParamRef> params() {
        std::vector<ParamRef> out;
        for (auto& p : net.params()) out.push_back({"clf." + p.name, p.value, p.grad});
        return out;
    }

    std::vector<ParamRef> state() {
        std::vector<ParamRef> out;
        for (auto& p : net.state()) out.push_back({"clf." + p.name, p.value, nullptr});
        return out;
    }

    void zero_grads() { net.zero_grads(); }
};

struct SemisupConfig {
    std::size_t labeled = 1000;
    std::size_t epochs = 20;
    std::size_t batch = 50;
    double lr = 0.1;
    double adadelta_decay = 0.95;
    double adadelta_eps = 1e-6;
    std::uint64_t seed = 1;
    double dropout_rate = 0.5;
    double input_noise = 0.1;
    std::size_t conv1 = 8, conv2 = 16, fc = 64, hidden = 64;
    double clean_weight = 0.5;  // weights of the plain / augmented loss halves
    double aug_weight = 0.5;

    static SemisupConfig from_config(Config& cfg) {
        SemisupConfig s;
        s.labeled = static_cast<std::size_t>(cfg.get_int("semisup.labeled", 1000));
        s.epochs = static_cast<std::size_t>(cfg.get_int("semisup.epochs", 20));
        s.batch = static_cast<std::size_t>(cfg.get_int("semisup.batch", 50));
        s.lr = cfg.get_double("opt.lr", 0.1);
        s.adadelta_decay = cfg.get_double("opt.decay", 0.95);
        s.adadelta_eps = cfg.get_double("opt.eps", 1e-6);
        s.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", 1));
        s.dropout_rate = cfg.get_double("semisup.dropout", 0.5);
        s.input_noise = cfg.get_double("semisup.noise", 0.1);
        s.conv1 = static_cast<std::size_t>(cfg.get_int("semisup.conv1", 8));
        s.conv2 = static_cast<std::size_t>(cfg.get_int("semisup.conv2", 16));
        s.fc = static_cast<std::size_t>(cfg.get_int("semisup.fc", 64));
        s.hidden = static_cast<std::size_t>(cfg.get_int("semisup.hidden", 64));
        s.clean_weight = cfg.get_double("semisup.wclean", 0.5);
        s.aug_weight = cfg.get_double("semisup.waug", 0.5);
        return s;
    }
};

inline Classifier build_classifier(const SemisupConfig& cfg, const std::vector<std::size_t>& sample_shape,
                                   std::size_t num_classes, Rng& rng) {
    Graph g(sample_shape);
    g.add(gaussian_noise(cfg.input_noise));
    if (detail::conv_friendly(sample_shape)) {
        std::size_t c = sample_shape[0], h = sample_shape[1], w = sample_shape[2];
        g.add(conv2d("conv1", c, cfg.conv1)).add(batchnorm("bn1", cfg.conv1)).add(relu()).add(maxpool2());
        g.add(conv2d("conv2", cfg.conv1, cfg.conv2)).add(batchnorm("bn2", cfg.conv2)).add(relu()).add(maxpool2());
        g.add(flatten()).add(dense("fc1", cfg.conv2 * (h / 4) * (w / 4), cfg.fc));
        g.add(batchnorm("bn3", cfg.fc)).add(relu()).add(dropout(cfg.dropout_rate));
        g.add(dense("fc2", cfg.fc, num_classes)).add(softmax());
    } else {
        std::size_t d = detail::flat_size(sample_shape);
        g.add(flatten()).add(dense("fc1", d, cfg.hidden)).add(batchnorm("bn1", cfg.hidden)).add(relu());
        g.add(dropout(cfg.dropout_rate)).add(dense("fc2", cfg.hidden, num_classes)).add(softmax());
    }
    g.init(rng);
    return Classifier(std::move(g), num_classes);
}

/// Mean cross entropy of softmax rows against integer labels.
inline double cross_entropy(const Tensor& probs, const std::vector<int>& labels) {
    std::size_t n = probs.dim(0), c = probs.dim(1);
    if (labels.size() != n) throw std::invalid_argument("cross_entropy: label count mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= c)
            throw std::out_of_range("cross_entropy: label " + std::to_string(y) + " out of range");
        s -= std::log(std::max(probs[i * c + static_cast<std::size_t>(y)], 1e-12));
    }
    return s / static_cast<double>(n);
}

inline Tensor cross_entropy_grad(const Tensor& probs, const std::vector<int>& labels, double weight) {
    std::size_t n = probs.dim(0), c = probs.dim(1);
    Tensor g({n, c});
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t y = static_cast<std::size_t>(labels[i]);
        g[i * c + y] = -weight / (static_cast<double>(n) * std::max(probs[i * c + y], 1e-12));
    }
    return g;
}

/// Produces one augmented view of a batch. The default wraps a frozen
/// transition generator; tests can substitute anything.
using AugSampler = std::function<Tensor(const Tensor&, Rng&)>;

inline AugSampler transition_sampler(TransitionGenerator& g) {
    return [&g](const Tensor& x, Rng& rng) { return transition_sample(g, x, rng, Mode::eval).xtilde; };
}

/// Weighted mix of the plain cross entropy and the cross entropy on one
/// augmented draw per example, the labels carried over unchanged.
inline double augmented_loss(Classifier& clf, const AugSampler& sampler, const Tensor& x,
                             const std::vector<int>& labels, double w_clean, double w_aug, Rng& rng) {
    Tape tape;
    double loss = w_clean * cross_entropy(clf.net.forward(x, Mode::eval, tape, &rng), labels);
    if (w_aug != 0.0) {
        Tensor xt = sampler(x, rng);
        Tape tape2;
        loss += w_aug * cross_entropy(clf.net.forward(xt, Mode::eval, tape2, &rng), labels);
    }
    return loss;
}

/// One optimizer step on the (optionally augmented) classification loss.
inline double classifier_step(Classifier& clf, const AugSampler& sampler, const Tensor& x,
                              const std::vector<int>& labels, double w_clean, double w_aug, Rng& rng, Adadelta& opt) {
    clf.zero_grads();
    Tape tape;
    Tensor probs = clf.net.forward(x, Mode::train, tape, &rng);
    double loss = w_clean * cross_entropy(probs, labels);
    clf.net.backward(cross_entropy_grad(probs, labels, w_clean), tape);
    if (w_aug != 0.0 && sampler) {
        Tensor xt = sampler(x, rng);
        Tape tape2;
        Tensor probs_aug = clf.net.forward(xt, Mode::train, tape2, &rng);
        loss += w_aug * cross_entropy(probs_aug, labels);
        clf.net.backward(cross_entropy_grad(probs_aug, labels, w_aug), tape2);
    }
    opt.step();
    return loss;
}

/// Fraction of argmax mistakes, eval mode, batched.
inline double classification_error(Classifier& clf, const Dataset& ds, std::size_t batch = 256) {
    std::size_t n = ds.count(), wrong = 0;
    for (std::size_t start = 0; start < n; start += batch) {
        std::size_t count = std::min(batch, n - start);
        std::vector<std::size_t> idx(count);
        for (std::size_t i = 0; i < count; ++i) idx[i] = start + i;
        Tensor probs = clf.net.forward(gather(ds.images, idx), Mode::eval);
        std::size_t c = probs.dim(1);
        for (std::size_t i = 0; i < count; ++i) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < c; ++j)
                if (probs[i * c + j] > probs[i * c + best]) best = j;
            if (static_cast<int>(best) != ds.labels[start + i]) ++wrong;
        }
    }
    return static_cast<double>(wrong) / static_cast<double>(n);
}

struct ClassifierResult {
    Classifier clf;
    double val_error = 1.0;
    double test_error = 1.0;
    std::size_t best_epoch = 0;
    std::vector<double> epoch_losses;
};

/// Trains on the labeled subset, selects the epoch by clean validation
/// error, reports the test error of the selected parameters. The transition
/// generator, when given, is a frozen sampler.
inline ClassifierResult train_classifier(const SemisupConfig& cfg, const Dataset& labeled, const Dataset& val,
                                         const Dataset& test, const AugSampler& sampler) {
    if (labeled.count() == 0 || !labeled.has_labels())
        throw std::invalid_argument("train_classifier: labeled subset must be nonempty and labeled");
    int max_label = 0;
    for (int l : labeled.labels) max_label = std::max(max_label, l);
    std::size_t classes = static_cast<std::size_t>(max_label) + 1;
    if (classes < 10) classes = 10;

    Rng rng(cfg.seed);
    ClassifierResult result;
    result.clf = build_classifier(cfg, labeled.sample_shape(), classes, rng);
    Adadelta opt(result.clf.params(), cfg.lr, cfg.adadelta_decay, cfg.adadelta_eps);

    double w_aug = sampler ? cfg.aug_weight : 0.0;
    double w_clean = sampler ? cfg.clean_weight : cfg.clean_weight + cfg.aug_weight;

    std::vector<Tensor> best;
    auto params = result.clf.params();
    auto state = result.clf.state();

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        auto batches = epoch_batches(labeled.count(), std::min(cfg.batch, labeled.count()), rng);
        for (auto& idx : batches) {
            Tensor x = gather(labeled.images, idx);
            auto y = gather_labels(labeled.labels, idx);
            epoch_loss += classifier_step(result.clf, sampler, x, y, w_clean, w_aug, rng, opt);
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(batches.size()));
        double err = classification_error(result.clf, val);
        if (err < result.val_error || best.empty()) {
            result.val_error = err;
            result.best_epoch = epoch;
            best = detail::snapshot(params, state);
        }
    }
    if (!best.empty())
        detail::restore(params, state, best);
    else
        result.val_error = classification_error(result.clf, val);  // zero-epoch run: untrained network
    result.test_error = classification_error(result.clf, test);
    return result;
}

}  // namespace vgf

#endif  // VGF_SEMISUP_HPP
