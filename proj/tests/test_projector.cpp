#include <catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "n2i/phantom.hpp"
#include "n2i/projector.hpp"

using namespace n2i;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Image random_image(int rows, int cols, std::mt19937_64& gen) {
    std::normal_distribution<double> n;
    Image img(rows, cols);
    for (double& v : img.values()) v = n(gen);
    return img;
}

double dot(const Image& a, const Image& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Eigen::MatrixXd dense_matrix(const Geometry& g) {
    const int n = g.image_size;
    Eigen::MatrixXd A(g.n_angles() * g.detector_count, n * n);
    for (int p = 0; p < n * n; ++p) {
        Image e(n, n);
        e[p] = 1.0;
        const Sinogram s = forward_project(e, g);
        for (std::size_t i = 0; i < s.data.size(); ++i) A(static_cast<Eigen::Index>(i), p) = s.data[i];
    }
    return A;
}

}  // namespace

TEST_CASE("back projection is the adjoint of forward projection") {
    std::mt19937_64 gen(3);
    for (int angles : {7, 30}) {
        for (double arc : {std::numbers::pi, std::numbers::pi / 3}) {
            const Geometry g = make_geometry(angles, 25, 17, arc);
            for (int trial = 0; trial < 5; ++trial) {
                const Image x = random_image(17, 17, gen);
                Sinogram y(g, random_image(angles, 25, gen));
                const double lhs = dot(forward_project(x, g).data, y.data);
                const double rhs = dot(x, back_project(y));
                CHECK_THAT(lhs, WithinRel(rhs, 1e-11));
            }
        }
    }
}

TEST_CASE("back projection equals the transpose of the assembled matrix") {
    const Geometry g = make_geometry(9, 13, 8);
    const Eigen::MatrixXd A = dense_matrix(g);
    std::mt19937_64 gen(5);
    Sinogram y(g, random_image(9, 13, gen));
    const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data.values().data(), y.data.size());
    const Eigen::VectorXd expected = A.transpose() * yv;
    const Image bp = back_project(y);
    for (std::size_t i = 0; i < bp.size(); ++i) CHECK_THAT(bp[i], WithinAbs(expected(i), 1e-12));
}

TEST_CASE("projector norm matches the largest singular value") {
    const Geometry g = make_geometry(12, 17, 10);
    const Eigen::MatrixXd A = dense_matrix(g);
    const double sigma = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(0);
    CHECK_THAT(projector_norm(g, 200), WithinRel(sigma, 1e-6));
    CHECK(projector_norm(g) <= sigma * (1 + 1e-12));
}

TEST_CASE("forward projection approximates exact line integrals") {
    const FoamPhantom f = generate_foam(6, 0.1, 0.2, 0.8, 2);
    const int n = 256;
    const Geometry g = make_geometry(10, default_detector_count(n), n);
    const Sinogram exact = analytic_sinogram(f, g, 8);
    const Sinogram approx = forward_project(rasterize(f, n), g);
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < exact.data.size(); ++i) {
        err += std::pow(approx.data[i] - exact.data[i], 2);
        ref += std::pow(exact.data[i], 2);
    }
    CHECK(std::sqrt(err / ref) < 0.02);
}

TEST_CASE("projection of a constant image gives the chord length through the square") {
    const int n = 32;
    const Geometry g = make_geometry(1, 45, n);
    Image ones(n, n);
    for (double& v : ones.values()) v = 1.0;
    const Sinogram s = forward_project(ones, g);
    for (int k = 0; k < g.detector_count; ++k) {
        const double t = g.detector_position(k);
        const double expected = std::abs(t) < 1.0 - g.pixel_size / 2 ? 2.0 : -1.0;
        if (expected > 0) CHECK_THAT(s.data(0, k), WithinAbs(expected, 1e-12));
    }
}

TEST_CASE("projector rejects mismatched shapes") {
    const Geometry g = make_geometry(4, 9, 8);
    CHECK_THROWS_AS(forward_project(Image(7, 8), g), std::invalid_argument);
}
