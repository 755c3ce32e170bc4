#include <catch_amalgamated.hpp>

#include <random>

#include "n2i/infer.hpp"

using namespace n2i;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<Image> random_subs(int k, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n;
    std::vector<Image> subs;
    for (int j = 0; j < k; ++j) {
        Image img(6, 7);
        for (double& v : img.values()) v = n(gen);
        subs.push_back(img);
    }
    return subs;
}

Image mean_all(const std::vector<Image>& subs) {
    Image m(subs[0].rows(), subs[0].cols());
    for (const Image& s : subs)
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += s[i] / subs.size();
    return m;
}

}  // namespace

TEST_CASE("identity denoiser returns the full reconstruction for both strategies") {
    const auto subs = random_subs(4, 1);
    const Image full = mean_all(subs);
    const Denoiser identity = [](const Image& x) { return x; };
    for (Strategy st : {Strategy::x1, Strategy::one_x}) {
        const Image out = noise2inverse_infer(identity, subs, make_scheme(4, st));
        for (std::size_t i = 0; i < out.size(); ++i) CHECK_THAT(out[i], WithinAbs(full[i], 1e-14));
    }
}

TEST_CASE("section-wise average applies the denoiser to every section input") {
    const auto subs = random_subs(3, 2);
    const SplitScheme scheme = make_scheme(3, Strategy::x1);
    const Denoiser square = [](const Image& x) {
        Image y = x;
        for (double& v : y.values()) v *= v;
        return y;
    };
    const Image out = noise2inverse_infer(square, subs, scheme);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double expected = 0.0;
        for (int j = 0; j < 3; ++j) {
            double in = 0.0;
            for (int k = 0; k < 3; ++k)
                if (k != j) in += subs[k][i] / 2;
            expected += in * in / 3;
        }
        CHECK_THAT(out[i], WithinAbs(expected, 1e-14));
    }
}

TEST_CASE("network inference checks normalisation and scheme") {
    const auto subs = random_subs(2, 3);
    Network net(NetworkConfig{2, 2, 1});
    CHECK_THROWS_AS(noise2inverse_infer(net, subs, make_scheme(2, Strategy::x1)), std::invalid_argument);
    net.normalization = Normalization{};
    net.scheme = make_scheme(4, Strategy::x1);
    CHECK_THROWS_AS(noise2inverse_infer(net, subs, make_scheme(2, Strategy::x1)), std::invalid_argument);
    net.scheme = make_scheme(2, Strategy::x1);
    const Image a = noise2inverse_infer(net, subs, make_scheme(2, Strategy::x1));
    const Image b = noise2inverse_infer([&](const Image& x) { return net.denoise(x); }, subs,
                                        make_scheme(2, Strategy::x1));
    CHECK(a == b);
}

TEST_CASE("masking inference takes each class from its own masked pass") {
    const auto subs = random_subs(1, 4);
    const Image& x = subs[0];
    const MaskPartition part{2};
    const Denoiser identity = [](const Image& v) { return v; };
    const Image out = noise2self_infer(identity, x, part);
    for (int phase = 0; phase < part.phase_count(); ++phase) {
        const MaskedInput m = mask_partition_pairs(x, part, phase);
        for (std::size_t i = 0; i < out.size(); ++i)
            if (m.target_mask[i]) CHECK(out[i] == m.input[i]);
    }
}
