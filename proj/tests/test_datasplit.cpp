#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <set>

#include "n2i/datasplit.hpp"

using namespace n2i;
using Catch::Matchers::WithinAbs;

namespace {

Image random_image(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n;
    Image img(rows, cols);
    for (double& v : img.values()) v = n(gen);
    return img;
}

}  // namespace

TEST_CASE("strategy names parse in both spellings") {
    CHECK(parse_strategy("X1") == Strategy::x1);
    CHECK(parse_strategy("x:1") == Strategy::x1);
    CHECK(parse_strategy("1X") == Strategy::one_x);
    CHECK(parse_strategy("1:x") == Strategy::one_x);
    CHECK(to_string(Strategy::x1) == "X1");
    CHECK(to_string(Strategy::one_x) == "1X");
    CHECK_THROWS_AS(parse_strategy("2X"), std::invalid_argument);
}

TEST_CASE("target and input sections partition the K sections") {
    for (int K : {2, 3, 4, 8}) {
        for (Strategy st : {Strategy::x1, Strategy::one_x}) {
            const SplitScheme scheme = make_scheme(K, st);
            REQUIRE(scheme.target_sections().size() == static_cast<std::size_t>(K));
            for (int j = 0; j < K; ++j) {
                const auto t = scheme.target_indices(j);
                const auto in = scheme.input_indices(j);
                CHECK(t.size() == (st == Strategy::x1 ? 1u : static_cast<std::size_t>(K - 1)));
                std::set<int> all(t.begin(), t.end());
                all.insert(in.begin(), in.end());
                CHECK(all.size() == static_cast<std::size_t>(K));
                CHECK(t.size() + in.size() == static_cast<std::size_t>(K));
            }
        }
    }
    CHECK_THROWS_AS(make_scheme(1, Strategy::x1), std::invalid_argument);
}

TEST_CASE("split then merge reproduces the sinogram") {
    const Geometry g = make_geometry(12, 5, 4);
    const Sinogram s(g, random_image(12, 5, 1));
    for (int K : {2, 3, 4, 6}) {
        const auto parts = split_sinogram(s, K);
        REQUIRE(parts.size() == static_cast<std::size_t>(K));
        for (int j = 0; j < K; ++j) {
            CHECK(parts[j].data.rows() == 12 / K);
            for (int r = 0; r < parts[j].data.rows(); ++r) {
                CHECK(parts[j].geometry.angles[r] == g.angles[j + r * K]);
                for (int c = 0; c < 5; ++c) CHECK(parts[j].data(r, c) == s.data(j + r * K, c));
            }
        }
        const Sinogram merged = merge_sinograms(parts, g);
        CHECK(merged.data == s.data);
    }
    CHECK_THROWS_AS(split_sinogram(s, 5), std::invalid_argument);
}

TEST_CASE("pairs average the selected sub-reconstructions") {
    std::vector<Image> subs;
    for (int j = 0; j < 4; ++j) subs.push_back(random_image(6, 6, 10 + j));
    const auto pairs = build_pairs(subs, make_scheme(4, Strategy::x1), 3);
    REQUIRE(pairs.size() == 4);
    for (int j = 0; j < 4; ++j) {
        CHECK(pairs[j].slice_id == 3);
        CHECK(pairs[j].section == j);
        CHECK(pairs[j].target == subs[j]);
        CHECK(pairs[j].target_mask.empty());
        for (std::size_t i = 0; i < 36; ++i) {
            double mean = 0.0;
            for (int k = 0; k < 4; ++k)
                if (k != j) mean += subs[k][i] / 3;
            CHECK_THAT(pairs[j].input[i], WithinAbs(mean, 1e-14));
        }
    }
}

TEST_CASE("with two sections both strategies give the same pair set") {
    const std::vector<Image> subs = {random_image(5, 5, 1), random_image(5, 5, 2)};
    const auto a = build_pairs(subs, make_scheme(2, Strategy::x1));
    const auto b = build_pairs(subs, make_scheme(2, Strategy::one_x));
    for (const DatasetPair& p : a) {
        const bool found = std::any_of(b.begin(), b.end(), [&](const DatasetPair& q) {
            return q.input == p.input && q.target == p.target;
        });
        CHECK(found);
    }
}

TEST_CASE("masking classes never hold two neighbouring pixels") {
    for (int stride : {2, 3, 4}) {
        const MaskPartition part{stride};
        std::vector<int> counts(part.phase_count());
        for (int r = 0; r < 12; ++r) {
            for (int c = 0; c < 12; ++c) {
                ++counts[part.phase_of(r, c)];
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc)
                        if ((dr || dc) && r + dr >= 0 && c + dc >= 0)
                            CHECK(part.phase_of(r + dr, c + dc) != part.phase_of(r, c));
            }
        }
        for (int n : counts) CHECK(n == 144 / (stride * stride));
    }
}

TEST_CASE("masked pixels are replaced by their neighbourhood mean") {
    const Image x = random_image(9, 11, 4);
    const MaskPartition part{4};
    for (int phase : {0, 5, 15}) {
        const MaskedInput m = mask_partition_pairs(x, part, phase);
        CHECK(m.target_mask == part.class_mask(9, 11, phase));
        for (int r = 0; r < 9; ++r) {
            for (int c = 0; c < 11; ++c) {
                if (part.phase_of(r, c) != phase) {
                    CHECK(m.input(r, c) == x(r, c));
                    continue;
                }
                double sum = 0.0;
                int n = 0;
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int rr = r + dr, cc = c + dc;
                        if ((dr || dc) && rr >= 0 && rr < 9 && cc >= 0 && cc < 11) {
                            sum += x(rr, cc);
                            ++n;
                        }
                    }
                }
                CHECK_THAT(m.input(r, c), WithinAbs(sum / n, 1e-14));
            }
        }
    }
}
