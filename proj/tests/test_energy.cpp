#include <catch2/catch.hpp>

#include "vgf/energy.hpp"
#include "vgf/gradcheck.hpp"

using namespace vgf;

namespace {

// phi = identity on a d-wide vector, experts = identity matrix: pre-activation
// j equals input coordinate j. Lets tests drive expert logits directly.
EnergyModel linear_probe_model(std::size_t k) {
    Rng rng(1);
    EnergyModel m(Graph({k}), k, rng);
    std::fill(m.w.raw().begin(), m.w.raw().end(), 0.0);
    for (std::size_t j = 0; j < k; ++j) m.w[j * k + j] = 1.0;
    std::fill(m.b.raw().begin(), m.b.raw().end(), 0.0);
    return m;
}

EnergyModel mlp_model(std::size_t in, std::size_t d_phi, std::size_t k, std::uint64_t seed) {
    Rng rng(seed);
    Graph phi({in});
    phi.add(dense("fc1", in, 6)).add(tanh_layer()).add(dense("fc2", 6, d_phi)).add(relu());
    phi.init(rng);
    return EnergyModel(std::move(phi), k, rng);
}

}  // namespace

TEST_CASE("binary entropy hits its known values", "[energy]") {
    REQUIRE(binary_entropy(0.5) == Approx(std::log(2.0)).margin(1e-14));
    REQUIRE(binary_entropy(0.0) == 0.0);
    REQUIRE(binary_entropy(1.0) == 0.0);
    REQUIRE(binary_entropy(0.1) == Approx(0.325083).margin(1e-6));
    REQUIRE_THROWS_AS(binary_entropy(-0.01), std::domain_error);
    REQUIRE_THROWS_AS(binary_entropy(1.01), std::domain_error);
}

TEST_CASE("logit-space entropy agrees with the probability form", "[energy]") {
    for (double a : {-5.0, -1.0, -0.3, 0.0, 0.7, 2.0, 8.0}) {
        REQUIRE(binary_entropy_from_logit(a) == Approx(binary_entropy(stable_sigmoid(a))).margin(1e-12));
    }
    // deep saturation: exact zero, no NaN
    REQUIRE(binary_entropy_from_logit(1000.0) == 0.0);
    REQUIRE(binary_entropy_from_logit(-1000.0) == 0.0);
    REQUIRE(binary_entropy_logit_grad(1000.0) == 0.0);
}

TEST_CASE("poe energy at zero pre-activation is exactly K ln 2", "[energy]") {
    auto m = linear_probe_model(4);
    Tensor e = poe_energy(m, Tensor({1, 4}));
    REQUIRE(e[0] == Approx(4.0 * std::log(2.0)).margin(1e-12));
}

TEST_CASE("poe energy vanishes at saturation", "[energy]") {
    auto m = linear_probe_model(3);
    Tensor e = poe_energy(m, Tensor::full({1, 3}, 40.0));
    REQUIRE(e[0] >= 0.0);
    REQUIRE(e[0] < 1e-12);
}

TEST_CASE("two experts at [0, ln 9] sum ln2 + H(0.9)", "[energy]") {
    auto m = linear_probe_model(2);
    Tensor e = poe_energy(m, Tensor({1, 2}, {0.0, std::log(9.0)}));
    REQUIRE(e[0] == Approx(1.018230).margin(1e-6));
}

TEST_CASE("poe energy stays in [0, K ln 2] for random inputs and parameters", "[energy][property]") {
    Rng rng(33);
    for (int rep = 0; rep < 20; ++rep) {
        auto m = mlp_model(4, 5, 7, 100 + rep);
        for (int i = 0; i < 50; ++i) {
            Tensor x = rng.uniform_tensor({1, 4}, -5.0, 5.0);
            double e = poe_energy(m, x)[0];
            REQUIRE(e >= 0.0);
            REQUIRE(e <= m.max_energy() + 1e-12);
        }
    }
}

TEST_CASE("all 2^K saturation patterns are energy minima", "[energy][property]") {
    for (std::size_t k = 1; k <= 3; ++k) {
        auto m = linear_probe_model(k);
        for (std::size_t pattern = 0; pattern < (1u << k); ++pattern) {
            Tensor x({1, k});
            for (std::size_t j = 0; j < k; ++j) x[j] = (pattern >> j) & 1 ? 20.0 : -20.0;
            double e = poe_energy(m, x)[0];
            REQUIRE(e < 1e-6);
        }
    }
}

TEST_CASE("per-sample energy is invariant to batch composition in eval mode", "[energy]") {
    auto m = mlp_model(3, 4, 5, 7);
    Rng rng(8);
    Tensor a = rng.uniform_tensor({1, 3}, -1.0, 1.0);
    Tensor batch({3, 3});
    for (int j = 0; j < 3; ++j) batch[j] = a[j];
    for (std::size_t i = 3; i < 9; ++i) batch[i] = rng.uniform(-1.0, 1.0);
    double solo = poe_energy(m, a)[0];
    double in_batch = poe_energy(m, batch)[0];
    REQUIRE(solo == Approx(in_batch).margin(1e-14));
}

TEST_CASE("gan energy head follows -log D", "[energy]") {
    Rng rng(9);
    GanModel m(Graph({3}), rng);
    std::fill(m.w.raw().begin(), m.w.raw().end(), 0.0);
    m.w[0] = 1.0;  // logit = x[0]

    REQUIRE(gan_energy(m, Tensor({1, 3}))[0] == Approx(std::log(2.0)).margin(1e-12));
    REQUIRE(gan_energy(m, Tensor({1, 3}, {50.0, 0, 0}))[0] < 1e-12);
    REQUIRE(gan_energy(m, Tensor({1, 3}, {-2.0, 0, 0}))[0] == Approx(2.126928).margin(1e-6));
    REQUIRE(gan_energy(m, Tensor({1, 3}, {-30.0, 0, 0}))[0] >= 0.0);
}

TEST_CASE("batch entropy score collapses and saturates as designed", "[energy]") {
    auto m = linear_probe_model(2);

    // identical, saturated batch: no diversity, score 0
    Tensor collapsed = Tensor::full({4, 2}, 40.0);
    REQUIRE(entropy_approx(m, collapsed) == Approx(0.0).margin(1e-12));

    // activations averaging 0.5 per expert: maximal score K ln 2
    Tensor spread({2, 2}, {40.0, 40.0, -40.0, -40.0});
    REQUIRE(entropy_approx(m, spread) == Approx(2.0 * std::log(2.0)).margin(1e-12));
}

TEST_CASE("batch entropy for K=1, activations {0.2, 0.6}", "[energy]") {
    auto m = linear_probe_model(1);
    auto logit = [](double p) { return std::log(p / (1.0 - p)); };
    Tensor x({2, 1}, {logit(0.2), logit(0.6)});
    REQUIRE(entropy_approx(m, x) == Approx(0.673012).margin(1e-6));
}

TEST_CASE("batch entropy is permutation invariant and equals the sample entropy at N=1", "[energy][property]") {
    auto m = mlp_model(3, 4, 6, 11);
    Rng rng(12);
    Tensor batch = rng.uniform_tensor({5, 3}, -2.0, 2.0);
    double h = entropy_approx(m, batch);

    Tensor reversed({5, 3});
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 3; ++j) reversed[i * 3 + j] = batch[(4 - i) * 3 + j];
    REQUIRE(entropy_approx(m, reversed) == Approx(h).margin(1e-12));

    Tensor one({1, 3}, {batch[0], batch[1], batch[2]});
    auto t = poe_forward(m, one, Mode::eval);
    double sum_h = 0.0;
    for (std::size_t j = 0; j < 6; ++j) sum_h += binary_entropy(t.probs[j]);
    REQUIRE(entropy_approx(m, one) == Approx(sum_h).margin(1e-12));

    // the data-side regularizer is the same formula
    REQUIRE(data_entropy_reg(m, batch) == Approx(h).margin(1e-15));
}

TEST_CASE("energy gradient vanishes at saturation relative to its peak", "[energy][property]") {
    // |dE/da| peaks near |a| = 1.54; at |a| = 20 it must be < 1e-6 of that
    double peak = 0.0;
    for (double a = -8.0; a <= 8.0; a += 1e-3) peak = std::max(peak, std::abs(binary_entropy_logit_grad(a)));
    double saturated = std::abs(binary_entropy_logit_grad(20.0));
    REQUIRE(saturated < 1e-6 * peak);
}

TEST_CASE("poe backward matches central differences", "[energy][gradcheck]") {
    auto m = mlp_model(4, 5, 3, 21);
    Rng rng(22);
    Tensor x = rng.uniform_tensor({3, 4}, -1.0, 1.0);
    Tensor c = rng.uniform_tensor({3}, -1.0, 1.0);
    const double ch = 0.7;

    auto loss = [&](const Tensor& xin) {
        auto t = poe_forward(m, xin, Mode::train);
        double s = 0.0;
        for (std::size_t i = 0; i < 3; ++i) s += c[i] * t.energy[i];
        return s + ch * entropy_of_mean_activation(t.probs);
    };

    m.zero_grads();
    auto tape = poe_forward(m, x, Mode::train);
    Tensor dx = poe_backward(m, tape, c, ch);

    GradCheckResult result;
    Tensor xv = x;
    check_against_central_diff([&] { return loss(xv); }, xv, dx, "input", result);
    for (auto& p : m.params()) {
        check_against_central_diff([&] { return loss(x); }, *p.value, *p.grad, p.name, result);
    }
    INFO(result.worst);
    REQUIRE(result.max_rel_err < 1e-4);
}

TEST_CASE("gan backward matches central differences", "[energy][gradcheck]") {
    Rng rng(23);
    Graph phi({4});
    phi.add(dense("fc1", 4, 5)).add(tanh_layer()).add(dense("fc2", 5, 3)).add(relu());
    phi.init(rng);
    GanModel m(std::move(phi), rng);
    Tensor x = rng.uniform_tensor({3, 4}, -1.0, 1.0);
    Tensor c = rng.uniform_tensor({3}, -1.0, 1.0);

    // loss = sum_i c_i * softplus(-s_i); d/ds_i = c_i * (sigmoid(s_i) - 1)
    auto loss = [&](const Tensor& xin) {
        auto t = gan_forward(m, xin, Mode::train);
        double s = 0.0;
        for (std::size_t i = 0; i < 3; ++i) s += c[i] * t.energy[i];
        return s;
    };

    m.zero_grads();
    auto tape = gan_forward(m, x, Mode::train);
    Tensor d_logits({3});
    for (std::size_t i = 0; i < 3; ++i) d_logits[i] = c[i] * (stable_sigmoid(tape.logits[i]) - 1.0);
    Tensor dx = gan_backward(m, tape, d_logits);

    GradCheckResult result;
    Tensor xv = x;
    check_against_central_diff([&] { return loss(xv); }, xv, dx, "input", result);
    for (auto& p : m.params()) {
        check_against_central_diff([&] { return loss(x); }, *p.value, *p.grad, p.name, result);
    }
    INFO(result.worst);
    REQUIRE(result.max_rel_err < 1e-4);
}

TEST_CASE("energy checkpoint round-trips through the tensor map", "[energy]") {
    auto m = mlp_model(3, 4, 5, 31);
    auto tensors = energy_tensors(m);
    auto m2 = mlp_model(3, 4, 5, 99);  // different init
    load_energy_tensors(m2, tensors);
    REQUIRE(m2.w.raw() == m.w.raw());
    auto pa = m.params(), pb = m2.params();
    for (std::size_t i = 0; i < pa.size(); ++i) REQUIRE(pa[i].value->raw() == pb[i].value->raw());

    tensors.erase("experts.bias");
    REQUIRE_THROWS_WITH(load_energy_tensors(m2, tensors), Catch::Contains("missing"));
}
