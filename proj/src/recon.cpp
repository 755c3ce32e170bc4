#include "n2i/recon.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "n2i/parallel.hpp"
#include "n2i/projector.hpp"

namespace n2i {
namespace {

void check_sinogram(const Sinogram& s) {
    if (s.data.rows() != s.geometry.n_angles() || s.data.cols() != s.geometry.detector_count)
        throw std::invalid_argument("recon: sinogram shape does not match geometry");
}

// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

class RampFilter {
public:
    RampFilter(int detector_count, double tau, int padding) : n_(detector_count), tau_(tau) {
        size_ = padding;
        if (size_ == 0) {
            size_ = 1;
            while (size_ < 2 * n_) size_ *= 2;
        }
        if (size_ < 2 * n_)
            throw std::invalid_argument("fbp: padding must be at least 2 * detector_count");
        const int bins = size_ / 2 + 1;
        real_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * size_)));
        spec_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
        {
            std::lock_guard lock(planner_mutex());
            forward_ = fftw_plan_dft_r2c_1d(size_, real_.get(), spec_.get(), FFTW_ESTIMATE);
            inverse_ = fftw_plan_dft_c2r_1d(size_, spec_.get(), real_.get(), FFTW_ESTIMATE);
        }
        // Spatial Ram-Lak kernel in wrap-around order, transformed once.
        for (int i = 0; i < size_; ++i) {
            const int m = i <= size_ / 2 ? i : i - size_;
            if (m == 0)
                real_.get()[i] = 1.0 / (4.0 * tau * tau);
            else if (m % 2 != 0)
                real_.get()[i] = -1.0 / (std::numbers::pi * std::numbers::pi * m * m * tau * tau);
            else
                real_.get()[i] = 0.0;
        }
        fftw_execute(forward_);
        response_.resize(bins);
        // tau from the convolution sum, 1/size from the unnormalised inverse.
        for (int b = 0; b < bins; ++b) response_[b] = spec_.get()[b][0] * tau_ / size_;
    }

    ~RampFilter() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(inverse_);
    }

    RampFilter(const RampFilter&) = delete;
    RampFilter& operator=(const RampFilter&) = delete;

    void apply(const double* in, double* out) {
        double* buf = real_.get();
        std::copy(in, in + n_, buf);
        std::fill(buf + n_, buf + size_, 0.0);
        fftw_execute(forward_);
        fftw_complex* spec = spec_.get();
        for (std::size_t b = 0; b < response_.size(); ++b) {
            spec[b][0] *= response_[b];
            spec[b][1] *= response_[b];
        }
        fftw_execute(inverse_);
        std::copy(buf, buf + n_, out);
    }

private:
    int n_;
    double tau_;
    int size_ = 0;
    std::unique_ptr<double, FftwFree> real_;
    std::unique_ptr<fftw_complex, FftwFree> spec_;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
    std::vector<double> response_;
};

// Pixel-driven backprojection with linear interpolation between detector bins.
Image interpolating_backprojection(const Image& filtered, const Geometry& g) {
    const int n = g.image_size;
    const double k_center = 0.5 * (g.detector_count - 1);
    std::vector<double> cosines(g.n_angles()), sines(g.n_angles());
    for (int a = 0; a < g.n_angles(); ++a) {
        cosines[a] = std::cos(g.angles[a]) / g.detector_pixel_size;
        sines[a] = std::sin(g.angles[a]) / g.detector_pixel_size;
    }
    Image image(n, n);
    parallel_for(n, [&](std::size_t row) {
        const int r = static_cast<int>(row);
        const double y = g.pixel_center(r);
        for (int c = 0; c < n; ++c) {
            const double x = g.pixel_center(c);
            double sum = 0.0;
            for (int a = 0; a < g.n_angles(); ++a) {
                const double f = x * cosines[a] + y * sines[a] + k_center;
                const double lo = std::floor(f);
                const int k = static_cast<int>(lo);
                const double w = f - lo;
                const double* q = filtered.row(a);
                if (k >= 0 && k < g.detector_count) sum += (1.0 - w) * q[k];
                if (k + 1 >= 0 && k + 1 < g.detector_count) sum += w * q[k + 1];
            }
            image(r, c) = sum * g.angle_weight();
        }
    });
    return image;
}

std::vector<double> inverse_or_zero(const Image& sums) {
    std::vector<double> out(sums.size());
    for (std::size_t i = 0; i < sums.size(); ++i)
        out[i] = std::abs(sums[i]) > 1e-12 ? 1.0 / sums[i] : 0.0;
    return out;
}

}  // namespace

Image fbp(const Sinogram& sinogram, const FilterSpec& filter) {
    check_sinogram(sinogram);
    const Geometry& g = sinogram.geometry;
    RampFilter ramp(g.detector_count, g.detector_pixel_size, filter.padding);
    Image filtered(g.n_angles(), g.detector_count);
    for (int a = 0; a < g.n_angles(); ++a) ramp.apply(sinogram.data.row(a), filtered.row(a));
    return interpolating_backprojection(filtered, g);
}

Image sub_reconstruct(const Sinogram& sinogram, int K, int section, const FilterSpec& filter) {
    check_sinogram(sinogram);
    Sinogram sub(sinogram.geometry.subset(K, section));
    for (int j = 0; j < sub.geometry.n_angles(); ++j) {
        const double* src = sinogram.data.row(section + j * K);
        std::copy(src, src + sub.data.cols(), sub.data.row(j));
    }
    return fbp(sub, filter);
}

Image sirt(const Sinogram& sinogram, int max_iters, const IterateCallback& on_iterate) {
    check_sinogram(sinogram);
    if (max_iters < 0) throw std::invalid_argument("sirt: max_iters must be >= 0");
    const Geometry& g = sinogram.geometry;
    Image x(g.image_size, g.image_size);
    if (max_iters == 0) return x;

    const std::vector<double> row_weight = inverse_or_zero(forward_project(Image(g.image_size, g.image_size, 1.0), g).data);
    Sinogram ones(g, Image(g.n_angles(), g.detector_count, 1.0));
    const std::vector<double> col_weight = inverse_or_zero(back_project(ones));

    for (int it = 1; it <= max_iters; ++it) {
        Sinogram residual = forward_project(x, g);
        for (std::size_t i = 0; i < residual.data.size(); ++i)
            residual.data[i] = (sinogram.data[i] - residual.data[i]) * row_weight[i];
        const Image update = back_project(residual);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += col_weight[i] * update[i];
        if (on_iterate) on_iterate(it, x);
    }
    return x;
}

double total_variation(const Image& image) {
    const int rows = image.rows(), cols = image.cols();
    double tv = 0.0;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double gx = c + 1 < cols ? image(r, c + 1) - image(r, c) : 0.0;
            const double gy = r + 1 < rows ? image(r + 1, c) - image(r, c) : 0.0;
            tv += std::sqrt(gx * gx + gy * gy);
        }
    }
    return tv;
}

double tv_objective(const Image& image, const Sinogram& sinogram, double lambda) {
    const Sinogram ax = forward_project(image, sinogram.geometry);
    double fit = 0.0;
    for (std::size_t i = 0; i < ax.data.size(); ++i) {
        const double d = ax.data[i] - sinogram.data[i];
        fit += d * d;
    }
    return 0.5 * fit + lambda * total_variation(image);
}

Image tv_prox(const Image& input, double mu, int iterations, std::vector<double>& dual) {
    const int rows = input.rows(), cols = input.cols();
    const std::size_t n = input.size();
    if (dual.size() != 2 * n) dual.assign(2 * n, 0.0);
    if (mu <= 0.0) return input;
    double* px = dual.data();
    double* py = dual.data() + n;

    // div p, the negative adjoint of the forward-difference gradient.
    auto divergence = [&](Image& out) {
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                const std::size_t i = static_cast<std::size_t>(r) * cols + c;
                double d = 0.0;
                if (c + 1 < cols) d += px[i];
                if (c > 0) d -= px[i - 1];
                if (r + 1 < rows) d += py[i];
                if (r > 0) d -= py[i - cols];
                out[i] = d;
            }
        }
    };

    constexpr double kTau = 0.125;
    Image field(rows, cols);
    for (int it = 0; it < iterations; ++it) {
        divergence(field);
        for (std::size_t i = 0; i < n; ++i) field[i] -= input[i] / mu;
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                const std::size_t i = static_cast<std::size_t>(r) * cols + c;
                const double gx = c + 1 < cols ? field[i + 1] - field[i] : 0.0;
                const double gy = r + 1 < rows ? field[i + cols] - field[i] : 0.0;
                const double denom = 1.0 + kTau * std::sqrt(gx * gx + gy * gy);
                px[i] = (px[i] + kTau * gx) / denom;
                py[i] = (py[i] + kTau * gy) / denom;
            }
        }
    }
    Image out(rows, cols);
    divergence(out);
    for (std::size_t i = 0; i < n; ++i) out[i] = input[i] - mu * out[i];
    return out;
}

Image tv_min_fista(const Sinogram& sinogram, double lambda, int max_iters, int inner_iters,
                   const IterateCallback& on_iterate) {
    check_sinogram(sinogram);
    if (lambda < 0.0) throw std::invalid_argument("tv_min_fista: lambda must be >= 0");
    if (max_iters < 1 || inner_iters < 1)
        throw std::invalid_argument("tv_min_fista: iteration counts must be >= 1");
    const Geometry& g = sinogram.geometry;
    const double norm = projector_norm(g, 30);
    // Power iteration approaches the norm from below; keep the step safely inside 1/L.
    const double lipschitz = 1.01 * norm * norm;

    Image x(g.image_size, g.image_size);
    Image z = x;
    std::vector<double> dual;
    double t = 1.0;
    for (int it = 1; it <= max_iters; ++it) {
        Sinogram residual = forward_project(z, g);
        for (std::size_t i = 0; i < residual.data.size(); ++i) residual.data[i] -= sinogram.data[i];
        const Image grad = back_project(residual);
        Image step = z;
        for (std::size_t i = 0; i < step.size(); ++i) step[i] -= grad[i] / lipschitz;
        Image next = tv_prox(step, lambda / lipschitz, inner_iters, dual);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double momentum = (t - 1.0) / t_next;
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = next[i] + momentum * (next[i] - x[i]);
        x = std::move(next);
        t = t_next;
        if (on_iterate) on_iterate(it, x);
    }
    return x;
}

}  // namespace n2i
