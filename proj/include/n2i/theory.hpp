#pragma once

#include <cstdint>
#include <vector>

#include "n2i/datasplit.hpp"
#include "n2i/geometry.hpp"
#include "n2i/infer.hpp"
#include "n2i/noise.hpp"

namespace n2i {

/// A small reconstruction problem with Gaussian sinogram noise. The clean
/// object is drawn uniformly from `clean` on every Monte-Carlo sample; a
/// single entry gives a fixed phantom.
struct TinyProblem {
    Geometry geometry;
    std::vector<Sinogram> clean;
    double sigma = 0.1;
    int k = 2;
};

/// Foam phantoms on an image_size^2 grid (default 16x16, 32 angles).
TinyProblem make_tiny_problem(int image_size, int n_angles, int family_size, double sigma,
                              std::uint64_t seed);

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Estimates of E|h(x~_Jc) - x~_J|^2 (lhs), E|h(x~_Jc) - x*_J|^2 (supervised),
/// E|x*_J - x~_J|^2 (variance) and the per-sample difference
/// lhs - supervised - variance (residual) with their standard errors.
struct DecompositionReport {
    Estimate lhs;
    Estimate supervised;
    Estimate variance;
    Estimate residual;
    std::size_t samples = 0;

    /// |residual| < z * residual.std_error. A residual that is exactly zero
    /// passes regardless of its standard error.
    bool holds(double z = 4.0) const;
};

/// Monte-Carlo check of the expected prediction error decomposition with the
/// X:1 sections of problem.k, J uniform. Every sample draws (phantom, noise, J)
/// from a stream keyed by (seed, sample index). Throws for n_samples < 100.
DecompositionReport decomposition_check(const TinyProblem& problem, const Denoiser& h, std::size_t n_samples,
                                std::uint64_t seed);

/// sigma^2 times the mean over J of the squared Frobenius norm of R_J: the
/// exact value of E|x*_J - x~_J|^2.
double analytic_reconstruction_variance(const TinyProblem& problem);

/// x -> M x with M a fixed Gaussian matrix with entries N(0, 1/n).
Denoiser random_linear_map(int image_size, std::uint64_t seed);

struct BiasReport {
    double max_abs_bias = 0.0;
    /// Fraction of pixels whose mean error exceeds 4 standard errors.
    double exceedance_fraction = 0.0;
    /// Pixel-averaged signed bias with its standard error.
    Estimate mean_bias;
    std::size_t samples = 0;
};

/// Empirical per-pixel mean of (noisy - clean) over n_samples draws.
BiasReport zero_mean_check(const NoiseModel& model, const Sinogram& clean, std::size_t n_samples,
                           std::uint64_t seed);

}  // namespace n2i
