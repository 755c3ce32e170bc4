#pragma once

#include <cmath>

#include "n2i/grid.hpp"

namespace oracle {

// Scalar-loop reference implementations, written without the library's
// separable filtering.
inline double psnr(const n2i::Image& x, const n2i::Image& ref, double range, const n2i::Mask& mask = {}) {
    double sse = 0.0;
    long n = 0;
    for (int r = 0; r < x.rows(); ++r)
        for (int c = 0; c < x.cols(); ++c) {
            if (!mask.empty() && !mask(r, c)) continue;
            sse += (x(r, c) - ref(r, c)) * (x(r, c) - ref(r, c));
            ++n;
        }
    return 10.0 * std::log10(range * range / (sse / n));
}

inline double ssim(const n2i::Image& x, const n2i::Image& y, double range, const n2i::Mask& mask = {}) {
    double w[11][11], total = 0.0;
    for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
            w[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
            total += w[i][j];
        }
    const double c1 = std::pow(0.01 * range, 2), c2 = std::pow(0.03 * range, 2);
    double sum = 0.0;
    long count = 0;
    for (int r = 5; r + 5 < x.rows(); ++r) {
        for (int c = 5; c + 5 < x.cols(); ++c) {
            if (!mask.empty() && !mask(r, c)) continue;
            double mx = 0, my = 0;
            for (int i = 0; i < 11; ++i)
                for (int j = 0; j < 11; ++j) {
                    mx += w[i][j] / total * x(r + i - 5, c + j - 5);
                    my += w[i][j] / total * y(r + i - 5, c + j - 5);
                }
            double vx = 0, vy = 0, cov = 0;
            for (int i = 0; i < 11; ++i)
                for (int j = 0; j < 11; ++j) {
                    const double dx = x(r + i - 5, c + j - 5) - mx, dy = y(r + i - 5, c + j - 5) - my;
                    vx += w[i][j] / total * dx * dx;
                    vy += w[i][j] / total * dy * dy;
                    cov += w[i][j] / total * dx * dy;
                }
            sum += (2 * mx * my + c1) * (2 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    }
    return sum / count;
}

}  // namespace oracle
