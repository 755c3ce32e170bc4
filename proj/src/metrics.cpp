#include "n2i/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace n2i {
namespace {

constexpr int kWindow = 11;
constexpr int kHalf = kWindow / 2;

void check_mask(const Image& image, const Mask& mask) {
    if (!mask.empty() && !mask.same_shape(image)) throw std::invalid_argument("metrics: mask shape mismatch");
}

std::array<double, kWindow> gaussian_window() {
    std::array<double, kWindow> w{};
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - kHalf;
        w[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

// Separable 'valid' filtering: output (rows - 10) x (cols - 10).
Image filter_valid(const Image& in, const std::array<double, kWindow>& w) {
    const int out_rows = in.rows() - kWindow + 1, out_cols = in.cols() - kWindow + 1;
    Image horizontal(in.rows(), out_cols);
    for (int r = 0; r < in.rows(); ++r)
        for (int c = 0; c < out_cols; ++c) {
            double s = 0.0;
            for (int k = 0; k < kWindow; ++k) s += w[k] * in(r, c + k);
            horizontal(r, c) = s;
        }
    Image out(out_rows, out_cols);
    for (int r = 0; r < out_rows; ++r)
        for (int c = 0; c < out_cols; ++c) {
            double s = 0.0;
            for (int k = 0; k < kWindow; ++k) s += w[k] * horizontal(r + k, c);
            out(r, c) = s;
        }
    return out;
}

struct SsimSum {
    double sum = 0.0;
    std::size_t count = 0;
};

void accumulate_ssim(const Image& x, const Image& y, double L, const Mask& mask, SsimSum& acc) {
    if (!x.same_shape(y)) throw std::invalid_argument("ssim: shape mismatch");
    check_mask(x, mask);
    if (x.rows() < kWindow || x.cols() < kWindow) throw std::invalid_argument("ssim: images must be at least 11x11");
    const auto w = gaussian_window();
    Image xx(x.rows(), x.cols()), yy(x.rows(), x.cols()), xy(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const Image mx = filter_valid(x, w), my = filter_valid(y, w);
    const Image sxx = filter_valid(xx, w), syy = filter_valid(yy, w), sxy = filter_valid(xy, w);
    const double c1 = (0.01 * L) * (0.01 * L), c2 = (0.03 * L) * (0.03 * L);
    for (int r = 0; r < mx.rows(); ++r) {
        for (int c = 0; c < mx.cols(); ++c) {
            if (!mask.empty() && !mask(r + kHalf, c + kHalf)) continue;
            const double mux = mx(r, c), muy = my(r, c);
            const double vx = sxx(r, c) - mux * mux, vy = syy(r, c) - muy * muy;
            const double cov = sxy(r, c) - mux * muy;
            acc.sum += ((2.0 * mux * muy + c1) * (2.0 * cov + c2)) /
                       ((mux * mux + muy * muy + c1) * (vx + vy + c2));
            ++acc.count;
        }
    }
}

double cross(const std::array<double, 2>& o, const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

}  // namespace

DataRange data_range(const Image& clean, const Mask& mask) {
    check_mask(clean, mask);
    DataRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    bool any = false;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        if (!mask.empty() && !mask[i]) continue;
        r.min = std::min(r.min, clean[i]);
        r.max = std::max(r.max, clean[i]);
        any = true;
    }
    if (!any) throw std::invalid_argument("data_range: no pixel selected");
    return r;
}

DataRange data_range(std::span<const Image> clean, std::span<const Mask> masks) {
    if (clean.empty() || clean.size() != masks.size())
        throw std::invalid_argument("data_range: need one mask per slice");
    DataRange r = data_range(clean[0], masks[0]);
    for (std::size_t s = 1; s < clean.size(); ++s) {
        const DataRange next = data_range(clean[s], masks[s]);
        r.min = std::min(r.min, next.min);
        r.max = std::max(r.max, next.max);
    }
    return r;
}

Mask object_mask(const Image& clean, double threshold_fraction) {
    if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0))
        throw std::invalid_argument("object_mask: threshold fraction must lie in (0, 1)");
    const DataRange range = data_range(clean);
    const double threshold = range.min + threshold_fraction * range.width();

    // (x, y) = (column, row). Only the extreme foreground pixels of each row
    // can be hull vertices.
    std::vector<std::array<double, 2>> points;
    for (int r = 0; r < clean.rows(); ++r) {
        int first = -1, last = -1;
        for (int c = 0; c < clean.cols(); ++c) {
            if (clean(r, c) > threshold) {
                if (first < 0) first = c;
                last = c;
            }
        }
        if (first < 0) continue;
        points.push_back({static_cast<double>(first), static_cast<double>(r)});
        if (last != first) points.push_back({static_cast<double>(last), static_cast<double>(r)});
    }
    if (points.empty()) throw std::invalid_argument("object_mask: empty foreground");

    std::sort(points.begin(), points.end());
    std::vector<std::array<double, 2>> hull(2 * points.size());
    std::size_t k = 0;
    for (const auto& p : points) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = points.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], points[i]) <= 0) --k;
        hull[k++] = points[i];
    }
    hull.resize(points.size() > 1 ? k - 1 : 1);

    Mask mask(clean.rows(), clean.cols());
    constexpr double kSlack = 1e-9;
    for (int r = 0; r < clean.rows(); ++r) {
        for (int c = 0; c < clean.cols(); ++c) {
            const std::array<double, 2> p{static_cast<double>(c), static_cast<double>(r)};
            bool inside = true;
            if (hull.size() >= 3) {
                for (std::size_t i = 0; i < hull.size() && inside; ++i)
                    inside = cross(hull[i], hull[(i + 1) % hull.size()], p) >= -kSlack;
            } else if (hull.size() == 2) {
                // Degenerate hull: the segment between the two points.
                const auto& a = hull[0];
                const auto& b = hull[1];
                const double t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) /
                                 ((b[0] - a[0]) * (b[0] - a[0]) + (b[1] - a[1]) * (b[1] - a[1]));
                inside = std::abs(cross(a, b, p)) <= kSlack && t >= -kSlack && t <= 1.0 + kSlack;
            } else {
                inside = p == hull[0];
            }
            mask(r, c) = inside ? 1 : 0;
        }
    }
    return mask;
}

double psnr(const Image& image, const Image& reference, const DataRange& range, const Mask& mask) {
    if (!image.same_shape(reference)) throw std::invalid_argument("psnr: shape mismatch");
    check_mask(image, mask);
    if (!(range.width() > 0.0)) throw std::invalid_argument("psnr: degenerate data range");
    double sse = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < image.size(); ++i) {
        if (!mask.empty() && !mask[i]) continue;
        const double d = image[i] - reference[i];
        sse += d * d;
        ++count;
    }
    if (count == 0) throw std::invalid_argument("psnr: no pixel selected");
    const double mse = sse / static_cast<double>(count);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(range.width() * range.width() / mse);
}

double ssim(const Image& image, const Image& reference, const DataRange& range, const Mask& mask) {
    if (!(range.width() > 0.0)) throw std::invalid_argument("ssim: degenerate data range");
    SsimSum acc;
    accumulate_ssim(image, reference, range.width(), mask, acc);
    if (acc.count == 0) throw std::invalid_argument("ssim: mask selects no window centre");
    return acc.sum / static_cast<double>(acc.count);
}

MetricReport evaluate_stack(std::span<const Image> outputs, std::span<const Image> references,
                            std::span<const Mask> masks) {
    if (outputs.size() != references.size() || outputs.size() != masks.size() || outputs.empty())
        throw std::invalid_argument("evaluate_stack: stacks must be non-empty and of equal length");
    MetricReport report;
    report.range = data_range(references, masks);
    if (!(report.range.width() > 0.0)) throw std::invalid_argument("evaluate_stack: degenerate data range");
    double sse = 0.0;
    std::size_t count = 0;
    SsimSum acc;
    for (std::size_t s = 0; s < outputs.size(); ++s) {
        const Image& out = outputs[s];
        const Image& ref = references[s];
        if (!out.same_shape(ref)) throw std::invalid_argument("evaluate_stack: shape mismatch");
        check_mask(out, masks[s]);
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (!masks[s].empty() && !masks[s][i]) continue;
            const double d = out[i] - ref[i];
            sse += d * d;
            ++count;
        }
        accumulate_ssim(out, ref, report.range.width(), masks[s], acc);
    }
    const double mse = sse / static_cast<double>(count);
    report.psnr = mse == 0.0 ? std::numeric_limits<double>::infinity()
                             : 10.0 * std::log10(report.range.width() * report.range.width() / mse);
    report.ssim = acc.count ? acc.sum / static_cast<double>(acc.count) : 0.0;
    report.mask_descriptor = "pooled convex-hull masks over " + std::to_string(outputs.size()) + " slices";
    return report;
}

}  // namespace n2i
