#pragma once

#include <functional>

#include "n2i/geometry.hpp"
#include "n2i/grid.hpp"

namespace n2i {

enum class FilterKind { ram_lak };

struct FilterSpec {
    FilterKind kind = FilterKind::ram_lak;
    /// Zero-padded FFT length; 0 selects the smallest power of two >= 2 * detector_count.
    int padding = 0;
};

/// Filtered backprojection. Each projection is convolved with the discrete
/// Ram-Lak kernel (h[0] = 1/(4 tau^2), h[odd n] = -1/(n pi tau)^2, h[even n] = 0)
/// through a zero-padded FFT, then backprojected with linear interpolation on
/// the detector and weighted by geometry.angle_weight(). Linear in the data.
Image fbp(const Sinogram& sinogram, const FilterSpec& filter = {});

/// FBP from angles section, section + K, ... (0-based section) with angular
/// weight K * arc / n_angles, so the mean over all K sections equals fbp().
Image sub_reconstruct(const Sinogram& sinogram, int K, int section, const FilterSpec& filter = {});

/// Called with the 1-based iteration number and the current iterate.
using IterateCallback = std::function<void(int, const Image&)>;

/// SIRT: x <- x + C A^T R (y - A x) from x = 0, with R and C the inverse row
/// and column sums of the projector (zero sums give zero weight).
Image sirt(const Sinogram& sinogram, int max_iters, const IterateCallback& on_iterate = {});

/// Isotropic total variation with forward differences and reflexive
/// (Neumann) boundary.
double total_variation(const Image& image);

/// 0.5 * |A x - y|^2 + lambda * TV(x).
double tv_objective(const Image& image, const Sinogram& sinogram, double lambda);

/// Minimises tv_objective with FISTA. Step 1/L with L the squared projector
/// norm from 30 power iterations; the TV proximal step runs `inner_iters`
/// iterations of Chambolle's dual projection, warm-started across outer steps.
Image tv_min_fista(const Sinogram& sinogram, double lambda, int max_iters, int inner_iters = 20,
                   const IterateCallback& on_iterate = {});

/// Proximal map of mu * TV, approximated by Chambolle's projection algorithm.
/// `dual` holds the two dual fields (2 x rows x cols) and is updated in place.
Image tv_prox(const Image& input, double mu, int iterations, std::vector<double>& dual);

}  // namespace n2i
