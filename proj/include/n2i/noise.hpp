#pragma once

#include <cstdint>
#include <span>
#include <variant>

#include "n2i/geometry.hpp"
#include "n2i/grid.hpp"

namespace n2i {

/// Photon-count noise on pre-log data: I0 exp(-p~) ~ Poisson(I0 exp(-p)).
struct PoissonNoise {
    double photon_count = 1000.0;
};

enum class NoiseDomain { sinogram, image };

/// Additive i.i.d. N(0, sigma^2).
struct GaussianNoise {
    double sigma = 1.0;
    NoiseDomain domain = NoiseDomain::sinogram;
};

using NoiseModel = std::variant<PoissonNoise, GaussianNoise>;

/// Zero counts are clamped to this value before taking the log.
inline constexpr double kMinCount = 0.5;

/// Mean of 1 - exp(-y_i) over the nonzero entries.
double absorption(std::span<const double> values);

/// Scale s such that absorption(s * y) == alpha to within 1e-8, found by
/// bisection on log s over [1e-6, 1e6]. Throws NoSolutionError when alpha
/// is outside the bracketed range and std::invalid_argument for alpha outside
/// (0, 1) or an all-zero input.
double calibrate_absorption(std::span<const double> values, double alpha);

/// Per-pixel draws are keyed by (seed, row-major pixel index).
Image apply_poisson(const Image& line_integrals, double photon_count, std::uint64_t seed);
Image apply_gaussian(const Image& values, double sigma, std::uint64_t seed);

/// Dispatches on the model. The domain tag of GaussianNoise is informational.
Image apply_noise(const NoiseModel& model, const Image& clean, std::uint64_t seed);

}  // namespace n2i
