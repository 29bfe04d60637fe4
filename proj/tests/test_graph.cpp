#include <catch2/catch.hpp>

#include "vgf/gradcheck.hpp"
#include "vgf/graph.hpp"

using namespace vgf;

namespace {

Tensor coeffs_for(const Tensor& y, std::uint64_t seed) {
    Rng rng(seed);
    return rng.uniform_tensor(y.shape(), -1.0, 1.0);
}

// Builds input, runs one train forward to size the coefficients, then checks
// all analytic gradients against central differences.
double fd_max_err(Graph& g, const Tensor& input, std::uint64_t seed = 17) {
    Rng rng(seed);
    Tape tape;
    Tensor y = g.forward(input, Mode::train, tape, &rng);
    Tensor c = coeffs_for(y, seed + 1);
    return check_graph_gradients(g, input, c, seed).max_rel_err;
}

}  // namespace

TEST_CASE("identity graph returns its input", "[graph]") {
    Graph g({3});
    Tensor x({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor y = g.forward(x, Mode::eval);
    REQUIRE(y.raw() == x.raw());
}

TEST_CASE("relu and sigmoid match their definitions", "[graph]") {
    Graph g({3});
    g.add(relu());
    Tensor y = g.forward(Tensor({1, 3}, {-1, 0, 2}), Mode::eval);
    REQUIRE(y.raw() == vgf::dvec{0, 0, 2});

    Graph s({1});
    s.add(sigmoid_layer());
    Tensor z = s.forward(Tensor({1, 1}, {0.0}), Mode::eval);
    REQUIRE(z[0] == Approx(0.5));
}

TEST_CASE("dense weight gradient for y = Wx, loss = sum(y)", "[graph]") {
    Graph g({2});
    g.add(dense("fc", 2, 2));
    // zero-initialized weights are fine: the gradient is x broadcast per row
    Tensor x({1, 2}, {1, 2});
    Tape tape;
    g.forward(x, Mode::train, tape);
    g.zero_grads();
    g.backward(Tensor::full({1, 2}, 1.0), tape);
    auto grads = g.gradients();
    REQUIRE(grads.at("fc.weight").raw() == vgf::dvec{1, 2, 1, 2});
    REQUIRE(grads.at("fc.bias").raw() == vgf::dvec{1, 1});
}

TEST_CASE("relu subgradient at zero is zero", "[graph]") {
    Graph g({2});
    g.add(relu());
    Tensor x({1, 2}, {0.0, -0.0});
    Tape tape;
    g.forward(x, Mode::train, tape);
    Tensor dx = g.backward(Tensor::full({1, 2}, 1.0), tape);
    REQUIRE(dx.raw() == vgf::dvec{0, 0});
}

TEST_CASE("backward without a forward pass is an error", "[graph]") {
    Graph g({2});
    g.add(relu());
    REQUIRE_THROWS_AS(g.backward(Tensor({1, 2})), std::logic_error);
}

TEST_CASE("shape mismatches are rejected", "[graph]") {
    Graph g({3});
    g.add(dense("fc", 3, 2));
    REQUIRE_THROWS_AS(g.forward(Tensor({1, 4}), Mode::eval), std::invalid_argument);

    Graph bad({3});
    REQUIRE_THROWS_AS(bad.add(dense("fc", 4, 2)), std::invalid_argument);
}

TEST_CASE("non-finite activations abort the pass", "[graph]") {
    Graph g({1});
    g.add(dense("fc", 1, 1));
    Tensor x({1, 1}, {std::numeric_limits<double>::infinity()});
    REQUIRE_THROWS_AS(g.forward(x, Mode::eval), std::runtime_error);
}

TEST_CASE("finite differences confirm every layer gradient", "[graph][gradcheck]") {
    SECTION("dense + tanh + dense") {
        Rng rng(3);
        Graph g({5});
        g.add(dense("a", 5, 7)).add(tanh_layer()).add(dense("b", 7, 4));
        g.init(rng);
        Tensor x = rng.uniform_tensor({3, 5}, -1.0, 1.0);
        REQUIRE(fd_max_err(g, x) < 1e-4);
    }

    SECTION("sigmoid and softmax") {
        Rng rng(4);
        Graph g({6});
        g.add(dense("a", 6, 6)).add(sigmoid_layer()).add(dense("b", 6, 5)).add(softmax());
        g.init(rng);
        Tensor x = rng.uniform_tensor({2, 6}, -1.0, 1.0);
        REQUIRE(fd_max_err(g, x) < 1e-4);
    }

    SECTION("relu away from the kink") {
        Rng rng(5);
        Graph g({4});
        g.add(dense("a", 4, 6)).add(relu()).add(dense("b", 6, 3));
        g.init(rng);
        Tensor x = rng.uniform_tensor({3, 4}, 0.5, 1.5);
        REQUIRE(fd_max_err(g, x) < 1e-4);
    }

    SECTION("conv2d + maxpool") {
        Rng rng(6);
        Graph g({2, 8, 8});
        g.add(conv2d("c1", 2, 3, 5, 1, 2)).add(tanh_layer()).add(maxpool2()).add(flatten()).add(dense("fc", 48, 3));
        g.init(rng);
        Tensor x = rng.uniform_tensor({2, 2, 8, 8}, -1.0, 1.0);
        REQUIRE(fd_max_err(g, x) < 1e-4);
    }

    SECTION("conv transpose upsampling") {
        Rng rng(7);
        Graph g({3, 4, 4});
        g.add(conv_transpose2d("d1", 3, 2, 5, 2, 2, 1)).add(sigmoid_layer());
        g.init(rng);
        Tensor x = rng.uniform_tensor({2, 3, 4, 4}, -1.0, 1.0);
        REQUIRE(fd_max_err(g, x) < 1e-4);
    }

    SECTION("batchnorm dense and conv") {
        Rng rng(8);
        Graph g({5});
        g.add(dense("a", 5, 6)).add(batchnorm("bn", 6)).add(tanh_layer()).add(dense("b", 6, 2));
        g.init(rng);
        Tensor x = rng.uniform_tensor({4, 5}, -1.0, 1.0);
        REQUIRE(fd_max_err(g, x) < 1e-4);

        Graph gc({2, 4, 4});
        gc.add(conv2d("c", 2, 3, 3, 1, 1)).add(batchnorm("bnc", 3)).add(tanh_layer());
        gc.init(rng);
        Tensor xc = rng.uniform_tensor({3, 2, 4, 4}, -1.0, 1.0);
        REQUIRE(fd_max_err(gc, xc) < 1e-4);
    }

    SECTION("dropout and gaussian noise with a pinned rng") {
        Rng rng(9);
        Graph g({6});
        g.add(gaussian_noise(0.1)).add(dense("a", 6, 5)).add(dropout(0.3)).add(tanh_layer()).add(dense("b", 5, 2));
        g.init(rng);
        Tensor x = rng.uniform_tensor({3, 6}, -1.0, 1.0);
        REQUIRE(fd_max_err(g, x) < 1e-4);
    }
}

TEST_CASE("batchnorm eval is a pure function of input and running stats", "[graph]") {
    Rng rng(11);
    Graph g({4});
    g.add(dense("a", 4, 4)).add(batchnorm("bn", 4));
    g.init(rng);

    // drift the running statistics away from their init
    for (int i = 0; i < 5; ++i) g.forward(rng.uniform_tensor({8, 4}, -2.0, 2.0), Mode::train);

    auto state_before = [&] {
        std::vector<double> s;
        for (auto& p : g.state()) s.insert(s.end(), p.value->raw().begin(), p.value->raw().end());
        return s;
    }();

    Tensor x = rng.uniform_tensor({3, 4}, -1.0, 1.0);
    Tensor y1 = g.forward(x, Mode::eval);
    Tensor y2 = g.forward(x, Mode::eval);
    REQUIRE(y1.raw() == y2.raw());

    auto state_after = [&] {
        std::vector<double> s;
        for (auto& p : g.state()) s.insert(s.end(), p.value->raw().begin(), p.value->raw().end());
        return s;
    }();
    REQUIRE(state_before == state_after);
}

TEST_CASE("train_frozen uses batch statistics without touching state", "[graph]") {
    Rng rng(12);
    Graph g({3});
    g.add(batchnorm("bn", 3));
    g.init(rng);

    Tensor x = rng.uniform_tensor({6, 3}, -1.0, 3.0);
    auto snapshot = [&] {
        std::vector<double> s;
        for (auto& p : g.state()) s.insert(s.end(), p.value->raw().begin(), p.value->raw().end());
        return s;
    };

    auto before = snapshot();
    Tensor y_frozen = g.forward(x, Mode::train_frozen);
    REQUIRE(snapshot() == before);

    Tensor y_train = g.forward(x, Mode::train);
    REQUIRE(y_frozen.raw() == y_train.raw());  // same batch statistics
    REQUIRE(snapshot() != before);             // but only train mutates
}

TEST_CASE("two graphs built with the same seed are bit-identical", "[graph]") {
    auto build = [] {
        Rng rng(99);
        Graph g({3, 8, 8});
        g.add(conv2d("c", 3, 4)).add(relu()).add(maxpool2()).add(flatten()).add(dense("fc", 64, 10));
        g.init(rng);
        return g;
    };
    Graph a = build(), b = build();
    auto pa = a.params(), pb = b.params();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) REQUIRE(pa[i].value->raw() == pb[i].value->raw());
}
