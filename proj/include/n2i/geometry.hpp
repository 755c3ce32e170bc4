#pragma once

#include <numbers>
#include <vector>

#include "n2i/grid.hpp"

namespace n2i {

/// Parallel-beam acquisition geometry.
///
/// The image occupies [-1, 1]^2 with pixel (r, c) centred at
/// x = -1 + (c + 0.5) * pixel_size, y = -1 + (r + 0.5) * pixel_size.
/// For a projection angle theta (radians from the x-axis) the detector axis is
/// u = (cos theta, sin theta); detector coordinate t addresses the line
/// {p : <p, u> = t}. Detector bins are centred at
/// t_k = (k - (detector_count - 1) / 2) * detector_pixel_size.
struct Geometry {
    std::vector<double> angles;
    double arc = std::numbers::pi;
    int detector_count = 0;
    double detector_pixel_size = 0.0;
    int image_size = 0;
    double pixel_size = 0.0;

    int n_angles() const { return static_cast<int>(angles.size()); }

    /// Angular quadrature weight applied per projection in backprojection.
    /// For a subset holding every K-th angle this is K times the full weight.
    double angle_weight() const { return arc / n_angles(); }

    double detector_position(int k) const {
        return (k - 0.5 * (detector_count - 1)) * detector_pixel_size;
    }
    double pixel_center(int index) const { return -1.0 + (index + 0.5) * pixel_size; }

    /// Angles section, section + K, section + 2K, ... (0-based section).
    Geometry subset(int K, int section) const;
};

/// Equally spaced angles arc * j / n_angles. The detector spans the image
/// diagonal 2*sqrt(2).
Geometry make_geometry(int n_angles, int detector_count, int image_size,
                       double arc = std::numbers::pi);

/// Smallest detector count whose bins are no wider than an image pixel.
int default_detector_count(int image_size);

/// Measurement-domain data: rows are angles, columns are detector bins.
struct Sinogram {
    Geometry geometry;
    Image data;

    Sinogram() = default;
    explicit Sinogram(Geometry g)
        : geometry(std::move(g)), data(geometry.n_angles(), geometry.detector_count) {}
    Sinogram(Geometry g, Image d) : geometry(std::move(g)), data(std::move(d)) {}
};

}  // namespace n2i
