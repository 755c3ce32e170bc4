#include "n2i/projector.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "n2i/parallel.hpp"
#include "n2i/rng.hpp"

namespace n2i {
namespace {

struct Direction {
    double cos_theta;
    double sin_theta;
    // True when the ray is traced row by row (|cos| >= |sin|).
    bool row_driven;
    // Path length per traced row or column.
    double step_length;
};

Direction direction(double theta, double pixel_size) {
    Direction d{std::cos(theta), std::sin(theta), false, 0.0};
    d.row_driven = std::abs(d.cos_theta) >= std::abs(d.sin_theta);
    d.step_length = pixel_size / (d.row_driven ? std::abs(d.cos_theta) : std::abs(d.sin_theta));
    return d;
}

void check_image(const Image& image, const Geometry& g) {
    if (image.rows() != g.image_size || image.cols() != g.image_size)
        throw std::invalid_argument("projector: image shape does not match geometry");
}

}  // namespace

Sinogram forward_project(const Image& image, const Geometry& g) {
    check_image(image, g);
    Sinogram sino(g);
    const int n = g.image_size;
    const double ps = g.pixel_size;
    parallel_for(g.n_angles(), [&](std::size_t a) {
        const Direction dir = direction(g.angles[a], ps);
        double* out = sino.data.row(static_cast<int>(a));
        for (int k = 0; k < g.detector_count; ++k) {
            const double t = g.detector_position(k);
            double sum = 0.0;
            for (int i = 0; i < n; ++i) {
                // Intersection with row/column i, as a fractional index along the other axis.
                const double along = g.pixel_center(i);
                const double cross = dir.row_driven
                                         ? (t - along * dir.sin_theta) / dir.cos_theta
                                         : (t - along * dir.cos_theta) / dir.sin_theta;
                const double f = (cross + 1.0) / ps - 0.5;
                const double lo = std::floor(f);
                const double w = f - lo;
                const int j = static_cast<int>(lo);
                if (j >= 0 && j < n)
                    sum += (1.0 - w) * (dir.row_driven ? image(i, j) : image(j, i));
                if (j + 1 >= 0 && j + 1 < n)
                    sum += w * (dir.row_driven ? image(i, j + 1) : image(j + 1, i));
            }
            out[k] = sum * dir.step_length;
        }
    });
    return sino;
}

Image back_project(const Sinogram& sinogram) {
    const Geometry& g = sinogram.geometry;
    if (sinogram.data.rows() != g.n_angles() || sinogram.data.cols() != g.detector_count)
        throw std::invalid_argument("back_project: sinogram shape does not match geometry");
    const int n = g.image_size;
    const double ps = g.pixel_size;
    const double dp = g.detector_pixel_size;
    const double k_center = 0.5 * (g.detector_count - 1);

    std::vector<Direction> dirs;
    dirs.reserve(g.n_angles());
    for (double theta : g.angles) dirs.push_back(direction(theta, ps));

    Image image(n, n);
    parallel_for(n, [&](std::size_t row) {
        const int r = static_cast<int>(row);
        for (int c = 0; c < n; ++c) {
            double sum = 0.0;
            for (int a = 0; a < g.n_angles(); ++a) {
                const Direction& dir = dirs[a];
                // In the traced frame the pixel sits at index `along_idx` on the
                // traced axis and `cross_idx` on the interpolated axis.
                const int along_idx = dir.row_driven ? r : c;
                const int cross_idx = dir.row_driven ? c : r;
                const double along = g.pixel_center(along_idx);
                const double slope = dir.row_driven ? dir.cos_theta : dir.sin_theta;
                const double shift = along * (dir.row_driven ? dir.sin_theta : dir.cos_theta);
                // f(t) = ((t - shift) / slope + 1) / ps - 0.5 must lie in (cross_idx - 1, cross_idx + 1).
                const double t_a = ((cross_idx - 1 + 0.5) * ps - 1.0) * slope + shift;
                const double t_b = ((cross_idx + 1 + 0.5) * ps - 1.0) * slope + shift;
                const double t_lo = std::min(t_a, t_b), t_hi = std::max(t_a, t_b);
                const int k_lo = std::max(0, static_cast<int>(std::ceil(t_lo / dp + k_center)));
                const int k_hi = std::min(g.detector_count - 1, static_cast<int>(std::floor(t_hi / dp + k_center)));
                const double* proj = sinogram.data.row(a);
                double acc = 0.0;
                for (int k = k_lo; k <= k_hi; ++k) {
                    const double t = g.detector_position(k);
                    const double f = ((t - shift) / slope + 1.0) / ps - 0.5;
                    const double w = 1.0 - std::abs(f - cross_idx);
                    if (w > 0.0) acc += w * proj[k];
                }
                sum += acc * dir.step_length;
            }
            image(r, c) = sum;
        }
    });
    return image;
}

double projector_norm(const Geometry& g, int iterations, std::uint64_t seed) {
    Image x(g.image_size, g.image_size);
    KeyedRng rng(seed, 0);
    std::normal_distribution<double> normal;
    for (double& v : x.values()) v = normal(rng);
    double sigma2 = 0.0;
    for (int it = 0; it < iterations; ++it) {
        double norm = 0.0;
        for (double v : x.values()) norm += v * v;
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;
        for (double& v : x.values()) v /= norm;
        x = back_project(forward_project(x, g));
        // |A^T A x| for unit x tends to the top eigenvalue of A^T A.
        double next = 0.0;
        for (double v : x.values()) next += v * v;
        sigma2 = std::sqrt(next);
    }
    return std::sqrt(sigma2);
}

}  // namespace n2i
