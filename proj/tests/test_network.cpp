// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <vector>

#include "beamlearn/codebook.hpp"
#include "beamlearn/errors.hpp"
#include "beamlearn/network.hpp"
#include "beamlearn/rng.hpp"
#include "support/gradcheck.hpp"

using namespace beamlearn;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "beamlearn_network_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

DenseNetwork identity_layer(std::size_t n) {
    DenseNetwork net;
    DenseLayer l;
    l.in = n;
    l.out = n;
    l.activation = Activation::Linear;
    l.weights.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        l.weights[i * n + i] = 1.0;
    l.biases.assign(n, 0.0);
    net.layers.push_back(std::move(l));
    return net;
}

} // namespace

TEST_CASE("forward") {
    SUBCASE("identity linear layer reproduces the input") {
        const DenseNetwork net = identity_layer(4);
        const std::vector<double> x = {0.5, -1.25, 3.0, 0.0};
        CHECK(forward(net, x) == x);
    }
    SUBCASE("tanh layer with zero weights outputs zeros") {
        Rng rng(1);
        DenseNetwork net = make_network({3, 5}, {Activation::Tanh}, rng);
        for (auto& w : net.layers[0].weights)
            w = 0.0;
        for (auto& b : net.layers[0].biases)
            b = 0.0;
        for (double y : forward(net, std::vector<double>{1.0, -2.0, 0.5}))
            CHECK(y == 0.0);
    }
    SUBCASE("two-layer net matches the explicit hand computation") {
        DenseNetwork net;
        DenseLayer l1;
        l1.in = 2;
        l1.out = 2;
        l1.activation = Activation::Tanh;
        l1.weights = {0.5, -0.25, 1.0, 0.75};
        l1.biases = {0.1, -0.2};
        DenseLayer l2;
        l2.in = 2;
        l2.out = 1;
        l2.activation = Activation::Linear;
        l2.weights = {2.0, -1.0};
        l2.biases = {0.5};
        net.layers = {l1, l2};

        const std::vector<double> x = {0.4, -0.8};
        // z1 = [0.5*0.4 - 0.25*(-0.8) + 0.1, 1.0*0.4 + 0.75*(-0.8) - 0.2]
        //    = [0.5, -0.4]
        const double a0 = std::tanh(0.5);
        const double a1 = std::tanh(-0.4);
        const double expected = 2.0 * a0 - 1.0 * a1 + 0.5;
        CHECK(forward(net, x)[0] == doctest::Approx(expected).epsilon(1e-15));
    }
    SUBCASE("pi-tanh output stays inside (-pi, pi)") {
        Rng rng(4);
        const DenseNetwork net = make_network({4, 8, 4}, {Activation::Relu, Activation::PiTanh},
                                              rng);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> x(4);
            for (double& v : x)
                v = rng.uniform(-20.0, 20.0);
            for (double y : forward(net, x)) {
                CHECK(y > -kPi);
                CHECK(y < kPi);
            }
        }
    }
    SUBCASE("input size mismatch is a usage error") {
        const DenseNetwork net = identity_layer(4);
        CHECK_THROWS_AS(forward(net, std::vector<double>{1.0}), UsageError);
    }
}

TEST_CASE("backward") {
    SUBCASE("linear layer with squared loss matches the closed form") {
        // y = Wx + b, L = (y - t)^2:
        //   dL/dW = 2(y - t) x^T, dL/db = 2(y - t), dL/dx = 2(y - t) W
        DenseNetwork net;
        DenseLayer l;
        l.in = 3;
        l.out = 1;
        l.activation = Activation::Linear;
        l.weights = {0.5, -1.5, 2.0};
        l.biases = {0.25};
        net.layers = {l};

        const std::vector<double> x = {1.0, -0.5, 0.75};
        const double t = 2.0;
        ForwardCache cache;
        forward(net, x, cache);
        const double y = cache.output[0];
        const double residual = 2.0 * (y - t);
        const BackwardResult grads = backward(net, cache, std::vector<double>{residual});
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(grads.param_grads.weights[0][i] ==
                  doctest::Approx(residual * x[i]).epsilon(1e-14));
            CHECK(grads.input_grad[i] ==
                  doctest::Approx(residual * l.weights[i]).epsilon(1e-14));
        }
        CHECK(grads.param_grads.biases[0][0] == doctest::Approx(residual).epsilon(1e-14));
    }
    SUBCASE("finite differences agree for every layer kind") {
        Rng rng(20);
        const std::vector<std::vector<Activation>> stacks = {
            {Activation::Relu, Activation::Linear},
            {Activation::Tanh, Activation::Tanh},
            {Activation::Relu, Activation::PiTanh},
            {Activation::Linear, Activation::Relu, Activation::Linear},
        };
        for (const auto& acts : stacks) {
            std::vector<std::size_t> sizes;
            sizes.push_back(5);
            for (std::size_t i = 0; i < acts.size(); ++i)
                sizes.push_back(4 + (i % 2));
            const DenseNetwork net = make_network(sizes, acts, rng);
            std::vector<double> x(5);
            for (double& v : x)
                v = rng.uniform(-1.5, 1.5);
            std::vector<double> lw(net.output_size());
            for (double& v : lw)
                v = rng.uniform(-1.0, 1.0);
            CHECK(testsupport::max_gradient_rel_error(net, x, lw) <= 1e-4);
        }
    }
    SUBCASE("zero upstream gives all-zero gradients") {
        Rng rng(8);
        const DenseNetwork net =
            make_network({3, 6, 2}, {Activation::Relu, Activation::Linear}, rng);
        ForwardCache cache;
        forward(net, std::vector<double>{0.1, 0.7, -0.3}, cache);
        const BackwardResult grads = backward(net, cache, std::vector<double>{0.0, 0.0});
        for (const auto& layer : grads.param_grads.weights)
            for (double g : layer)
                CHECK(g == 0.0);
        for (const auto& layer : grads.param_grads.biases)
            for (double g : layer)
                CHECK(g == 0.0);
        for (double g : grads.input_grad)
            CHECK(g == 0.0);
    }
    SUBCASE("stale cache is rejected") {
        Rng rng(3);
        const DenseNetwork a = make_network({3, 2}, {Activation::Linear}, rng);
        const DenseNetwork b = make_network({4, 2}, {Activation::Linear}, rng);
        ForwardCache cache;
        forward(a, std::vector<double>{1.0, 2.0, 3.0}, cache);
        CHECK_THROWS_AS(backward(b, cache, std::vector<double>{1.0, 1.0}), UsageError);
    }
}

TEST_CASE("apply_update (adaptive moments)") {
    SUBCASE("zero gradients leave parameters unchanged") {
        Rng rng(6);
        DenseNetwork net = make_network({3, 3}, {Activation::Linear}, rng);
        const DenseNetwork before = net;
        AdamState opt = make_adam(net, 0.1);
        apply_update(net, Gradients::zeros_like(net), opt);
        CHECK(net.layers[0].weights == before.layers[0].weights);
        CHECK(net.layers[0].biases == before.layers[0].biases);
        CHECK(opt.step == 1);
    }
    SUBCASE("first step moves a scalar by about -lr * sign(g)") {
        DenseNetwork net;
        DenseLayer l;
        l.in = 1;
        l.out = 1;
        l.activation = Activation::Linear;
        l.weights = {1.0};
        l.biases = {0.0};
        net.layers = {l};
        AdamState opt = make_adam(net, 0.01);
        Gradients g = Gradients::zeros_like(net);
        g.weights[0][0] = 3.7; // any positive constant: mhat/sqrt(vhat) = sign
        apply_update(net, g, opt);
        CHECK(net.layers[0].weights[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));

        g.weights[0][0] = -0.2;
        DenseNetwork net2;
        net2.layers = {l};
        AdamState opt2 = make_adam(net2, 0.01);
        apply_update(net2, g, opt2);
        CHECK(net2.layers[0].weights[0] == doctest::Approx(1.0 + 0.01).epsilon(1e-6));
    }
    SUBCASE("identical nets and gradients update identically") {
        Rng rng(10);
        DenseNetwork a = make_network({4, 6, 2}, {Activation::Relu, Activation::Linear}, rng);
        DenseNetwork b = a;
        AdamState oa = make_adam(a, 1e-3);
        AdamState ob = make_adam(b, 1e-3);
        Gradients g = Gradients::zeros_like(a);
        Rng grng(11);
        for (auto& layer : g.weights)
            for (double& v : layer)
                v = grng.normal();
        for (auto& layer : g.biases)
            for (double& v : layer)
                v = grng.normal();
        for (int step = 0; step < 5; ++step) {
            apply_update(a, g, oa);
            apply_update(b, g, ob);
        }
        for (std::size_t l = 0; l < a.layers.size(); ++l) {
            CHECK(a.layers[l].weights == b.layers[l].weights);
            CHECK(a.layers[l].biases == b.layers[l].biases);
        }
    }
    SUBCASE("non-finite gradients are rejected and parameters survive") {
        Rng rng(12);
        DenseNetwork net = make_network({2, 2}, {Activation::Linear}, rng);
        const DenseNetwork before = net;
        AdamState opt = make_adam(net, 1e-3);
        Gradients g = Gradients::zeros_like(net);
        g.weights[0][1] = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(apply_update(net, g, opt), UsageError);
        CHECK(net.layers[0].weights == before.layers[0].weights);

        g.weights[0][1] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(apply_update(net, g, opt), UsageError);
    }
}

TEST_CASE("copy_into_target") {
    Rng rng(14);
    DenseNetwork source = make_network({3, 5, 2}, {Activation::Relu, Activation::Tanh}, rng);
    DenseNetwork target = make_network({3, 5, 2}, {Activation::Relu, Activation::Tanh}, rng);

    copy_into_target(source, target);
    SUBCASE("forward passes agree after the copy") {
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> x(3);
            for (double& v : x)
                v = rng.uniform(-2.0, 2.0);
            CHECK(forward(source, x) == forward(target, x));
        }
    }
    SUBCASE("perturbing the source leaves the target unchanged") {
        const DenseNetwork snapshot = target;
        source.layers[0].weights[0] += 5.0;
        CHECK(target.layers[0].weights == snapshot.layers[0].weights);
    }
    SUBCASE("copies are idempotent") {
        copy_into_target(source, target);
        const DenseNetwork once = target;
        copy_into_target(source, target);
        for (std::size_t l = 0; l < target.layers.size(); ++l)
            CHECK(target.layers[l].weights == once.layers[l].weights);
    }
    SUBCASE("architecture mismatch is rejected") {
        DenseNetwork other = make_network({3, 4, 2}, {Activation::Relu, Activation::Tanh}, rng);
        CHECK_THROWS_AS(copy_into_target(source, other), UsageError);
        DenseNetwork diff_act =
            make_network({3, 5, 2}, {Activation::Relu, Activation::Linear}, rng);
        CHECK_THROWS_AS(copy_into_target(source, diff_act), UsageError);
    }
}

TEST_CASE("initialization") {
    Rng rng(16);
    const DenseNetwork net = make_network({10, 20, 5}, {Activation::Relu, Activation::PiTanh},
                                          rng, 1e-3);
    SUBCASE("hidden layer respects the fan-in bound") {
        const double bound = 1.0 / std::sqrt(10.0);
        for (double w : net.layers[0].weights) {
            CHECK(w <= bound);
            CHECK(w >= -bound);
        }
    }
    SUBCASE("final layer uses the tight bound") {
        for (double w : net.layers[1].weights) {
            CHECK(w <= 1e-3);
            CHECK(w >= -1e-3);
        }
    }
    SUBCASE("seeded initialization is reproducible") {
        Rng r1(123), r2(123);
        const DenseNetwork a = make_network({4, 4}, {Activation::Tanh}, r1);
        const DenseNetwork b = make_network({4, 4}, {Activation::Tanh}, r2);
        CHECK(a.layers[0].weights == b.layers[0].weights);
        CHECK(a.layers[0].biases == b.layers[0].biases);
    }
}

TEST_CASE("checkpoints") {
    Rng rng(18);
    DenseNetwork net = make_network({4, 8, 3}, {Activation::Relu, Activation::PiTanh}, rng);
    AdamState opt = make_adam(net, 2.5e-4);
    // take a step so the moments are non-trivial
    Gradients g = Gradients::zeros_like(net);
    for (auto& layer : g.weights)
        for (double& v : layer)
            v = rng.normal();
    apply_update(net, g, opt);

    SUBCASE("network and optimizer round trip bitwise") {
        const auto path = temp_file("net.json");
        save_checkpoint(net, &opt, path);
        const Checkpoint ck = load_checkpoint(path);
        REQUIRE(same_architecture(ck.network, net));
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            CHECK(ck.network.layers[l].weights == net.layers[l].weights);
            CHECK(ck.network.layers[l].biases == net.layers[l].biases);
        }
        REQUIRE(ck.optimizer);
        CHECK(ck.optimizer->learning_rate == opt.learning_rate);
        CHECK(ck.optimizer->step == opt.step);
        CHECK(ck.optimizer->m_weights == opt.m_weights);
        CHECK(ck.optimizer->v_weights == opt.v_weights);
    }
    SUBCASE("network-only checkpoint omits the optimizer") {
        const auto path = temp_file("net_only.json");
        save_checkpoint(net, nullptr, path);
        const Checkpoint ck = load_checkpoint(path);
        CHECK(!ck.optimizer);
    }
    SUBCASE("corrupted blobs are rejected") {
        const auto path = temp_file("net_bad.json");
        save_checkpoint(net, nullptr, path);
        // truncate the parameter blob
        std::ifstream in(path);
        std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        in.close();
        const auto pos = text.find("parameters_b64");
        text.erase(pos + 20, 8);
        std::ofstream out(path);
        out << text;
        out.close();
        CHECK_THROWS_AS(load_checkpoint(path), IngestionError);
    }
    SUBCASE("missing files are rejected") {
        CHECK_THROWS_AS(load_checkpoint(temp_file("nope.json")), IngestionError);
    }
}
