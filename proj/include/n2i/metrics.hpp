#pragma once

#include <span>
#include <string>

#include "n2i/grid.hpp"

namespace n2i {

struct DataRange {
    double min = 0.0;
    double max = 0.0;

    double width() const { return max - min; }
};

/// Min and max over the pixels set in `mask` (all pixels if the mask is empty).
/// Throws std::invalid_argument when no pixel is selected.
DataRange data_range(const Image& clean, const Mask& mask = {});
/// Pooled over a stack of slices, each with its own mask (masks may be empty).
DataRange data_range(std::span<const Image> clean, std::span<const Mask> masks);

/// Convex hull (monotone chain over the row-wise boundary pixels) of the
/// pixels above min + threshold_fraction * (max - min). Throws if no pixel
/// exceeds the threshold.
Mask object_mask(const Image& clean, double threshold_fraction = 0.1);

/// 10 log10(range^2 / MSE) over the mask. Returns +infinity when MSE is zero;
/// throws std::invalid_argument for a degenerate range.
double psnr(const Image& image, const Image& reference, const DataRange& range, const Mask& mask = {});

/// Mean SSIM with an 11x11 Gaussian window (sigma 1.5), C1 = (0.01 L)^2,
/// C2 = (0.03 L)^2, L = range width. Windows lie fully inside the image; the
/// mean is taken over windows whose centre pixel is in the mask. Images must
/// be at least 11x11.
double ssim(const Image& image, const Image& reference, const DataRange& range, const Mask& mask = {});

struct MetricReport {
    double psnr = 0.0;
    double ssim = 0.0;
    DataRange range;
    std::string mask_descriptor;
};

/// Pools all masked pixels (PSNR) and all masked windows (SSIM) of a stack of
/// slices. The data range comes from the masked clean references.
MetricReport evaluate_stack(std::span<const Image> outputs, std::span<const Image> references,
                            std::span<const Mask> masks);

}  // namespace n2i
