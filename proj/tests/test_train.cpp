#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <random>

#include "n2i/train.hpp"

using namespace n2i;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Image random_image(int rows, int cols, std::uint64_t seed, double sd = 1.0) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n(0.0, sd);
    Image img(rows, cols);
    for (double& v : img.values()) v = n(gen);
    return img;
}

// Smooth images with independent noise on input and target.
std::vector<DatasetPair> toy_pairs(int count) {
    std::vector<DatasetPair> pairs;
    for (int i = 0; i < count; ++i) {
        Image clean(16, 16);
        for (int r = 0; r < 16; ++r)
            for (int c = 0; c < 16; ++c) clean(r, c) = std::sin(0.4 * r + i) * std::cos(0.3 * c);
        Image in = random_image(16, 16, 100 + i, 0.3), out = random_image(16, 16, 200 + i, 0.3);
        for (std::size_t p = 0; p < clean.size(); ++p) {
            in[p] += clean[p];
            out[p] += clean[p];
        }
        pairs.push_back({in, out, i, 0, {}});
    }
    return pairs;
}

}  // namespace

TEST_CASE("MSE loss and its gradient") {
    const Image a = random_image(5, 6, 1), b = random_image(5, 6, 2);
    const LossValue l = mse_loss(a, b);
    double expected = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) expected += std::pow(a[i] - b[i], 2);
    CHECK_THAT(l.value, WithinRel(expected / 30, 1e-14));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK_THAT(l.gradient[i], WithinAbs(2 * (a[i] - b[i]) / 30, 1e-15));

    Mask m(5, 6);
    m(1, 1) = m(3, 4) = 1;
    const LossValue lm = mse_loss(a, b, m);
    CHECK_THAT(lm.value, WithinRel((std::pow(a(1, 1) - b(1, 1), 2) + std::pow(a(3, 4) - b(3, 4), 2)) / 2, 1e-14));
    CHECK(lm.gradient(0, 0) == 0.0);
    CHECK_THROWS_AS(mse_loss(a, b, Mask(5, 6)), std::invalid_argument);
    CHECK_THROWS_AS(mse_loss(a, Image(6, 5)), std::invalid_argument);
}

TEST_CASE("Adam step follows the bias-corrected update") {
    Network net(NetworkConfig{1, 1, 0});
    const std::vector<double> start(net.parameters().begin(), net.parameters().end());
    TrainConfig cfg;
    cfg.learning_rate = 0.01;
    std::vector<double> g(start.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = 0.1 * (static_cast<double>(i) - 5);
    adam_step(net, g, cfg);
    adam_step(net, g, cfg);
    for (std::size_t i = 0; i < g.size(); ++i) {
        // Constant gradient: m_hat = g and v_hat = g^2 after any number of steps.
        const double step = cfg.learning_rate * g[i] / (std::abs(g[i]) + cfg.epsilon);
        CHECK_THAT(net.parameters()[i], WithinAbs(start[i] - 2 * step, 1e-12));
    }
    CHECK(net.adam.step == 2);
    CHECK_THROWS_AS(adam_step(net, std::vector<double>(3), cfg), std::invalid_argument);
}

TEST_CASE("normalisation is fitted on the inputs") {
    std::vector<DatasetPair> pairs(2);
    pairs[0].input = Image(1, 2);
    pairs[0].input[0] = 1;
    pairs[0].input[1] = 3;
    pairs[1].input = Image(1, 2);
    pairs[1].input[0] = 5;
    pairs[1].input[1] = 7;
    const Normalization n = fit_normalization(pairs);
    CHECK_THAT(n.mean, WithinAbs(4.0, 1e-15));
    CHECK_THAT(n.scale, WithinAbs(std::sqrt(5.0), 1e-14));
}

TEST_CASE("training lowers the loss on a denoising toy problem") {
    const auto pairs = toy_pairs(12);
    Network net(NetworkConfig{4, 2, 1});
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 4;
    cfg.learning_rate = 3e-3;
    const auto losses = train(pairs, net, cfg);
    REQUIRE(losses.size() == 30);
    CHECK(losses.back() < 0.8 * losses.front());
    CHECK(net.normalization.has_value());
    CHECK(net.adam.step == 30 * 3);
}

TEST_CASE("training does not depend on the worker count") {
    const auto pairs = toy_pairs(7);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 3;
    auto run = [&](const char* threads) {
        setenv("N2I_THREADS", threads, 1);
        Network net(NetworkConfig{3, 2, 5});
        const auto losses = train(pairs, net, cfg);
        unsetenv("N2I_THREADS");
        return std::pair(std::vector<double>(net.parameters().begin(), net.parameters().end()), losses);
    };
    const auto one = run("1");
    const auto three = run("3");
    CHECK(one.first == three.first);
    CHECK(one.second == three.second);
}

TEST_CASE("a zero learning rate leaves the parameters unchanged") {
    const auto pairs = toy_pairs(3);
    Network net(NetworkConfig{2, 2, 5});
    const std::vector<double> before(net.parameters().begin(), net.parameters().end());
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.learning_rate = 0.0;
    train(pairs, net, cfg);
    CHECK(std::equal(before.begin(), before.end(), net.parameters().begin()));
}

TEST_CASE("invalid training configs are rejected") {
    Network net(NetworkConfig{1, 1, 0});
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(train(toy_pairs(2), net, cfg), std::invalid_argument);
    cfg = {};
    CHECK_THROWS_AS(train(std::vector<DatasetPair>{}, net, cfg), std::invalid_argument);
}
