#pragma once

#include "n2i/geometry.hpp"
#include "n2i/grid.hpp"

namespace n2i {

/// Joseph projector: each ray is traced along its dominant image axis and
/// sampled with linear interpolation across the other axis, weighted by the
/// path length per step. Pixels outside the inscribed circle are projected
/// like any other.
Sinogram forward_project(const Image& image, const Geometry& geometry);

/// Exact matrix transpose of forward_project. Evaluated pixel by pixel with
/// the same interpolation weights, so it parallelises without write races.
Image back_project(const Sinogram& sinogram);

/// Largest singular value of the projector, by power iteration on A^T A.
double projector_norm(const Geometry& geometry, int iterations = 30, std::uint64_t seed = 1);

}  // namespace n2i
