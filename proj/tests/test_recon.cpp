#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "n2i/phantom.hpp"
#include "n2i/projector.hpp"
#include "n2i/recon.hpp"

using namespace n2i;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Sinogram random_sinogram(const Geometry& g, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n;
    Sinogram s(g);
    for (double& v : s.data.values()) v = n(gen);
    return s;
}

double norm2(const Image& a) {
    double s = 0.0;
    for (double v : a.values()) s += v * v;
    return s;
}

double residual2(const Image& x, const Sinogram& y) {
    const Sinogram ax = forward_project(x, y.geometry);
    double s = 0.0;
    for (std::size_t i = 0; i < ax.data.size(); ++i) s += std::pow(ax.data[i] - y.data[i], 2);
    return s;
}

// Isotropic TV from forward differences with zero difference past the border.
double naive_tv(const Image& x) {
    double tv = 0.0;
    for (int r = 0; r < x.rows(); ++r) {
        for (int c = 0; c < x.cols(); ++c) {
            const double dr = r + 1 < x.rows() ? x(r + 1, c) - x(r, c) : 0.0;
            const double dc = c + 1 < x.cols() ? x(r, c + 1) - x(r, c) : 0.0;
            tv += std::sqrt(dr * dr + dc * dc);
        }
    }
    return tv;
}

}  // namespace

TEST_CASE("FBP of a disk recovers its density") {
    const int n = 128;
    const Geometry g = make_geometry(180, default_detector_count(n), n);
    const Disk d{0.1, -0.05, 0.5, 1.0};
    const Image x = fbp(analytic_sinogram(std::span(&d, 1), g));
    double inside = 0.0, outside = 0.0;
    int n_in = 0, n_out = 0;
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const double dist = std::hypot(g.pixel_center(c) - d.cx, g.pixel_center(r) - d.cy);
            if (dist < 0.4) { inside += x(r, c); ++n_in; }
            if (dist > 0.6 && dist < 0.9) { outside += std::abs(x(r, c)); ++n_out; }
        }
    }
    CHECK_THAT(inside / n_in, WithinAbs(1.0, 0.02));
    CHECK(outside / n_out < 0.02);
}

TEST_CASE("FBP is linear") {
    const Geometry g = make_geometry(20, 23, 16);
    const Sinogram a = random_sinogram(g, 1), b = random_sinogram(g, 2);
    Sinogram combo(g);
    for (std::size_t i = 0; i < combo.data.size(); ++i) combo.data[i] = 2.0 * a.data[i] - 0.5 * b.data[i];
    const Image fa = fbp(a), fb = fbp(b), fc = fbp(combo);
    for (std::size_t i = 0; i < fc.size(); ++i) CHECK_THAT(fc[i], WithinAbs(2.0 * fa[i] - 0.5 * fb[i], 1e-10));
}

TEST_CASE("sub-reconstructions average to the full reconstruction") {
    const Geometry g = make_geometry(24, 23, 16);
    const Sinogram s = random_sinogram(g, 3);
    const Image full = fbp(s);
    for (int K : {2, 3, 4, 6}) {
        Image mean(16, 16);
        for (int j = 0; j < K; ++j) {
            const Image sub = sub_reconstruct(s, K, j);
            for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += sub[i] / K;
        }
        for (std::size_t i = 0; i < mean.size(); ++i) CHECK_THAT(mean[i], WithinAbs(full[i], 1e-12));
    }
    CHECK_THROWS_AS(sub_reconstruct(s, 5, 0), std::invalid_argument);
}

TEST_CASE("SIRT reduces the data residual and approaches the phantom") {
    const int n = 32;
    const Geometry g = make_geometry(48, default_detector_count(n), n);
    const FoamPhantom f = generate_foam(5, 0.1, 0.2, 0.8, 3);
    const Image truth = rasterize(f, n);
    const Sinogram y = forward_project(truth, g);
    std::vector<double> residuals, errors;
    Image last;
    const Image x = sirt(y, 60, [&](int, const Image& it) {
        last = it;
        residuals.push_back(residual2(it, y));
        Image diff = it;
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= truth[i];
        errors.push_back(norm2(diff));
    });
    REQUIRE(residuals.size() == 60);
    for (std::size_t i = 1; i < residuals.size(); ++i) CHECK(residuals[i] <= residuals[i - 1] * (1 + 1e-12));
    CHECK(residuals.back() < 0.05 * residual2(Image(n, n), y));
    CHECK(errors.back() < 0.2 * norm2(truth));
    CHECK(x == last);
}

TEST_CASE("total variation matches a direct evaluation") {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(-1, 1);
    Image x(9, 13);
    for (double& v : x.values()) v = u(gen);
    CHECK_THAT(total_variation(x), WithinRel(naive_tv(x), 1e-13));
    Image flat(5, 5);
    for (double& v : flat.values()) v = 3.0;
    CHECK(total_variation(flat) == 0.0);
}

TEST_CASE("TV prox is the identity for mu = 0 and flattens for large mu") {
    std::mt19937_64 gen(8);
    std::normal_distribution<double> n;
    Image x(12, 12);
    for (double& v : x.values()) v = n(gen);
    std::vector<double> dual;
    const Image same = tv_prox(x, 0.0, 10, dual);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK_THAT(same[i], WithinAbs(x[i], 1e-14));

    dual.clear();
    const Image flat = tv_prox(x, 1e4, 2000, dual);
    double mean_in = 0.0, mean_out = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mean_in += x[i];
        mean_out += flat[i];
    }
    CHECK_THAT(mean_out, WithinAbs(mean_in, 1e-9));
    const auto [lo, hi] = std::minmax_element(flat.values().begin(), flat.values().end());
    CHECK(*hi - *lo < 1e-2);
}

TEST_CASE("TV prox decreases the prox objective") {
    std::mt19937_64 gen(9);
    std::normal_distribution<double> n;
    Image x(10, 10);
    for (double& v : x.values()) v = n(gen);
    const double mu = 0.3;
    std::vector<double> dual;
    const Image p = tv_prox(x, mu, 200, dual);
    auto objective = [&](const Image& z) {
        double s = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) s += 0.5 * std::pow(z[i] - x[i], 2);
        return s + mu * total_variation(z);
    };
    CHECK(objective(p) < objective(x));
    // Small perturbations of the prox point should not improve the objective much.
    std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
    for (int t = 0; t < 20; ++t) {
        Image q = p;
        q[pick(gen)] += 1e-3 * (t % 2 ? 1 : -1);
        CHECK(objective(q) >= objective(p) - 1e-5);
    }
}

TEST_CASE("TV-FISTA lowers the objective and flattens for huge lambda") {
    const int n = 24;
    const Geometry g = make_geometry(36, default_detector_count(n), n);
    const FoamPhantom f = generate_foam(4, 0.1, 0.2, 0.8, 5);
    Sinogram y = forward_project(rasterize(f, n), g);
    std::mt19937_64 gen(2);
    std::normal_distribution<double> noise(0.0, 0.05);
    for (double& v : y.data.values()) v += noise(gen);

    const double lambda = 0.05;
    std::vector<double> objective;
    const Image x = tv_min_fista(y, lambda, 80, 20, [&](int, const Image& it) {
        objective.push_back(tv_objective(it, y, lambda));
    });
    REQUIRE(objective.size() == 80);
    CHECK(objective.back() < tv_objective(Image(n, n), y, lambda));
    CHECK(objective.back() <= objective[10]);
    CHECK(tv_objective(x, y, lambda) == objective.back());

    const Image flat = tv_min_fista(y, 1e6, 50, 50);
    CHECK(total_variation(flat) < 1e-3 * total_variation(x));
    CHECK_THROWS_AS(tv_min_fista(y, -1.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(tv_min_fista(y, 0.1, 0), std::invalid_argument);
}
