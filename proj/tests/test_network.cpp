#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "n2i/network.hpp"

using namespace n2i;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Image random_image(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n;
    Image img(rows, cols);
    for (double& v : img.values()) v = n(gen);
    return img;
}

int reflect(int i, int n) {
    while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
    return i;
}

// Direct evaluation of the dense dilated network, one output pixel at a time.
Image naive_forward(Network& net, const Image& x) {
    const NetworkConfig& cfg = net.config();
    std::vector<Image> features = {x};
    for (int layer = 0; layer < cfg.depth; ++layer) {
        const auto w = net.layer_weights(layer);
        const int d = cfg.dilation(layer);
        Image out(x.rows(), x.cols());
        for (int r = 0; r < x.rows(); ++r) {
            for (int c = 0; c < x.cols(); ++c) {
                double s = net.layer_bias(layer);
                for (int ch = 0; ch <= layer; ++ch)
                    for (int tap = 0; tap < 9; ++tap)
                        s += w[9 * ch + tap] * features[ch](reflect(r + (tap / 3 - 1) * d, x.rows()),
                                                           reflect(c + (tap % 3 - 1) * d, x.cols()));
                out(r, c) = std::max(s, 0.0);
            }
        }
        features.push_back(out);
    }
    Image y(x.rows(), x.cols());
    const auto w = net.output_weights();
    for (std::size_t i = 0; i < y.size(); ++i) {
        double s = net.output_bias();
        for (int ch = 0; ch <= cfg.depth; ++ch) s += w[ch] * features[ch][i];
        y[i] = s;
    }
    return y;
}

double weighted_output(const Network& net, const Image& x, const Image& g) {
    const Image y = net.forward(x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * g[i];
    return s;
}

}  // namespace

TEST_CASE("parameter count follows the dense layout") {
    for (int depth : {1, 3, 20}) {
        NetworkConfig cfg{depth, 5, 0};
        std::size_t expected = 0;
        for (int i = 1; i <= depth; ++i) expected += 9 * i + 1;
        expected += depth + 2;
        CHECK(cfg.parameter_count() == expected);
        CHECK(Network(cfg).parameters().size() == expected);
    }
    CHECK(NetworkConfig{20, 5, 0}.max_dilation() == 5);
    CHECK(NetworkConfig{3, 5, 0}.max_dilation() == 3);
    CHECK_THROWS_AS(Network(NetworkConfig{0, 5, 0}), std::invalid_argument);
}

TEST_CASE("initialisation is He-scaled and seeded") {
    Network a(NetworkConfig{20, 5, 1}), b(NetworkConfig{20, 5, 1}), c(NetworkConfig{20, 5, 2});
    CHECK(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
    CHECK_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), c.parameters().begin()));
    const auto w = a.layer_weights(19);
    double sq = 0.0;
    for (double v : w) sq += v * v;
    CHECK_THAT(std::sqrt(sq / w.size()), WithinRel(std::sqrt(2.0 / 180.0), 0.15));
    for (int l = 0; l < 20; ++l) CHECK(a.layer_bias(l) == 0.0);
    CHECK(a.output_bias() == 0.0);
}

TEST_CASE("forward pass matches a direct evaluation with reflection borders") {
    for (auto [depth, rows, cols] : {std::tuple{3, 8, 8}, std::tuple{7, 9, 6}, std::tuple{20, 12, 13}}) {
        Network net(NetworkConfig{depth, 5, 3});
        std::mt19937_64 gen(depth);
        std::normal_distribution<double> n(0.0, 0.1);
        for (int l = 0; l < depth; ++l) net.layer_bias(l) = n(gen);
        net.output_bias() = 0.3;
        const Image x = random_image(rows, cols, 7);
        const Image fast = net.forward(x);
        const Image slow = naive_forward(net, x);
        for (std::size_t i = 0; i < fast.size(); ++i) CHECK_THAT(fast[i], WithinAbs(slow[i], 1e-10));
    }
}

TEST_CASE("backward matches central finite differences") {
    Network net(NetworkConfig{3, 5, 11});
    std::mt19937_64 gen(1);
    std::normal_distribution<double> n(0.0, 0.1);
    for (int l = 0; l < 3; ++l) net.layer_bias(l) = 0.05 + std::abs(n(gen));
    const Image x = random_image(8, 8, 2);
    const Image g = random_image(8, 8, 3);
    Trace trace;
    net.forward(x, trace);
    std::vector<double> grads(net.parameters().size());
    net.backward(trace, g, grads);
    const double h = 1e-6;
    for (std::size_t p = 0; p < grads.size(); ++p) {
        const double saved = net.parameters()[p];
        net.parameters()[p] = saved + h;
        const double up = weighted_output(net, x, g);
        net.parameters()[p] = saved - h;
        const double down = weighted_output(net, x, g);
        net.parameters()[p] = saved;
        const double numeric = (up - down) / (2 * h);
        CHECK(std::abs(grads[p] - numeric) <= 1e-5 * std::max(1.0, std::abs(numeric)));
    }
}

TEST_CASE("backward accumulates and validates its inputs") {
    Network net(NetworkConfig{2, 2, 1});
    const Image x = random_image(6, 6, 1), g = random_image(6, 6, 2);
    Trace trace;
    std::vector<double> once(net.parameters().size()), twice(net.parameters().size());
    CHECK_THROWS_AS(net.backward(trace, g, once), std::logic_error);
    net.forward(x, trace);
    net.backward(trace, g, once);
    net.backward(trace, g, twice);
    net.backward(trace, g, twice);
    for (std::size_t i = 0; i < once.size(); ++i) CHECK_THAT(twice[i], WithinAbs(2 * once[i], 1e-12));
    CHECK_THROWS_AS(net.backward(trace, Image(5, 6), once), std::invalid_argument);
}

TEST_CASE("denoise applies the normalisation around the network") {
    Network net(NetworkConfig{2, 2, 4});
    const Image x = random_image(7, 7, 5);
    net.normalization = Normalization{0.5, 2.0};
    Image normalized = x;
    for (double& v : normalized.values()) v = (v - 0.5) / 2.0;
    const Image raw = net.forward(normalized);
    const Image out = net.denoise(x);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK_THAT(out[i], WithinAbs(raw[i] * 2.0 + 0.5, 1e-12));
}

TEST_CASE("checkpoint round trip is bit exact") {
    Network net(NetworkConfig{4, 3, 9});
    net.normalization = Normalization{0.125, 3.5};
    net.scheme = make_scheme(4, Strategy::one_x);
    net.adam.first_moment.assign(net.parameters().size(), 0.25);
    net.adam.second_moment.assign(net.parameters().size(), 1e-7);
    net.adam.step = 17;
    std::stringstream io;
    net.save(io);
    const Network back = Network::load(io);
    CHECK(back.config().depth == 4);
    CHECK(back.config().dilation_cycle == 3);
    CHECK(back.config().seed == 9);
    CHECK(std::equal(net.parameters().begin(), net.parameters().end(), back.parameters().begin()));
    CHECK(back.normalization == net.normalization);
    CHECK(back.scheme == net.scheme);
    CHECK(back.adam.step == 17);
    CHECK(back.adam.first_moment == net.adam.first_moment);
    CHECK(back.adam.second_moment == net.adam.second_moment);

    std::stringstream bad("not a checkpoint\n");
    CHECK_THROWS(Network::load(bad));
}
