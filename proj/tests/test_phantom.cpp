#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

#include "n2i/errors.hpp"
#include "n2i/phantom.hpp"

using namespace n2i;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Indicator of the disk integrated along the line by the midpoint rule.
double numeric_chord(const Disk& d, double theta, double t) {
    const double c = std::cos(theta), s = std::sin(theta);
    const int steps = 200000;
    const double h = 4.0 / steps;
    double length = 0.0;
    for (int i = 0; i < steps; ++i) {
        const double a = -2.0 + (i + 0.5) * h;
        const double x = t * c - a * s, y = t * s + a * c;
        if ((x - d.cx) * (x - d.cx) + (y - d.cy) * (y - d.cy) < d.radius * d.radius) length += h;
    }
    return length;
}

}  // namespace

TEST_CASE("foam bubbles are inside the cylinder and do not touch") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const FoamPhantom f = generate_foam(40, 0.03, 0.12, 0.9, seed);
        REQUIRE(f.bubbles.size() == 40);
        CHECK(f.cylinder.radius == 0.9);
        for (std::size_t i = 0; i < f.bubbles.size(); ++i) {
            const Disk& a = f.bubbles[i];
            CHECK(a.radius >= 0.03);
            CHECK(a.radius <= 0.12);
            CHECK(std::hypot(a.cx, a.cy) + a.radius < 0.9);
            if (i > 0) CHECK(a.radius <= f.bubbles[i - 1].radius);
            for (std::size_t j = 0; j < i; ++j) {
                const Disk& b = f.bubbles[j];
                CHECK(std::hypot(a.cx - b.cx, a.cy - b.cy) > a.radius + b.radius);
            }
        }
    }
}

TEST_CASE("foam generation is deterministic per seed") {
    CHECK(generate_foam(10, 0.05, 0.1, 0.8, 5) == generate_foam(10, 0.05, 0.1, 0.8, 5));
    CHECK_FALSE(generate_foam(10, 0.05, 0.1, 0.8, 5) == generate_foam(10, 0.05, 0.1, 0.8, 6));
}

TEST_CASE("overfull foam reports how many bubbles were placed") {
    try {
        generate_foam(50, 0.3, 0.3, 0.9, 1);
        FAIL("expected CapacityError");
    } catch (const CapacityError& e) {
        CHECK(e.placed() < 50);
    }
    CHECK_THROWS_AS(generate_foam(3, 0.2, 0.1, 0.9, 1), std::invalid_argument);
}

TEST_CASE("disk chord matches a numeric line integral") {
    const Disk d{0.2, -0.1, 0.35, 1.0};
    for (double theta : {0.0, 0.4, 1.3, 2.9}) {
        for (double t : {-0.3, 0.0, 0.15, 0.5, 0.9}) {
            CHECK_THAT(disk_chord(d, std::cos(theta), std::sin(theta), t),
                       WithinAbs(numeric_chord(d, theta, t), 1e-4));
        }
    }
}

TEST_CASE("every projection of the analytic sinogram carries the phantom mass") {
    const FoamPhantom f = generate_foam(12, 0.05, 0.15, 0.8, 9);
    double mass = 0.0;
    for (const Disk& d : f.additive_disks()) mass += d.density * std::numbers::pi * d.radius * d.radius;
    const Geometry g = make_geometry(16, 91, 64);
    const Sinogram s = analytic_sinogram(f, g, 8);
    for (int a = 0; a < g.n_angles(); ++a) {
        double sum = 0.0;
        for (int k = 0; k < g.detector_count; ++k) sum += s.data(a, k) * g.detector_pixel_size;
        CHECK_THAT(sum, WithinRel(mass, 1e-3));
    }
}

TEST_CASE("rasterized phantom integrates to the phantom mass") {
    const FoamPhantom f = generate_foam(12, 0.05, 0.15, 0.8, 4);
    double mass = 0.0;
    for (const Disk& d : f.additive_disks()) mass += d.density * std::numbers::pi * d.radius * d.radius;
    const Image img = rasterize(f, 128);
    double sum = 0.0;
    for (double v : img.values()) sum += v;
    const double ps = 2.0 / 128;
    CHECK_THAT(sum * ps * ps, WithinRel(mass, 5e-3));
    for (double v : img.values()) {
        CHECK(v >= -1e-12);
        CHECK(v <= 1.0 + 1e-12);
    }
}

TEST_CASE("phantom text round trip is exact") {
    const FoamPhantom f = generate_foam(7, 0.05, 0.15, 0.8, 11);
    std::stringstream io;
    write_phantom(io, f);
    CHECK(read_phantom(io) == f);
}
