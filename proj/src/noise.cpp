#include "n2i/noise.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "n2i/errors.hpp"
#include "n2i/rng.hpp"

namespace n2i {

double absorption(std::span<const double> values) {
    double sum = 0.0;
    std::size_t count = 0;
    for (double y : values) {
        if (y != 0.0) {
            sum += -std::expm1(-y);
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("absorption: sinogram has no nonzero entry");
    return sum / static_cast<double>(count);
}

double calibrate_absorption(std::span<const double> values, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("calibrate_absorption: alpha must lie in (0, 1)");
    std::vector<double> nonzero;
    for (double y : values)
        if (y != 0.0) nonzero.push_back(y);
    if (nonzero.empty())
        throw std::invalid_argument("calibrate_absorption: sinogram has no nonzero entry");

    auto absorption_at = [&](double log_s) {
        const double s = std::exp(log_s);
        double sum = 0.0;
        for (double y : nonzero) sum += -std::expm1(-s * y);
        return sum / static_cast<double>(nonzero.size());
    };

    double lo = std::log(1e-6), hi = std::log(1e6);
    const double f_lo = absorption_at(lo), f_hi = absorption_at(hi);
    if (alpha < f_lo || alpha > f_hi)
        throw NoSolutionError("calibrate_absorption: alpha = " + std::to_string(alpha) +
                              " outside reachable range [" + std::to_string(f_lo) + ", " +
                              std::to_string(f_hi) + "]");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = absorption_at(mid);
        if (std::abs(f - alpha) < 1e-12) return std::exp(mid);
        (f < alpha ? lo : hi) = mid;
    }
    return std::exp(0.5 * (lo + hi));
}

Image apply_poisson(const Image& line_integrals, double photon_count, std::uint64_t seed) {
    if (!(photon_count > 0.0)) throw std::invalid_argument("apply_poisson: I0 must be positive");
    Image noisy(line_integrals.rows(), line_integrals.cols());
    for (std::size_t i = 0; i < line_integrals.size(); ++i) {
        const double p = line_integrals[i];
        if (p < 0.0)
            throw std::invalid_argument("apply_poisson: negative line integral at index " +
                                        std::to_string(i));
        KeyedRng rng(seed, i);
        std::poisson_distribution<long long> counts(photon_count * std::exp(-p));
        const double c = static_cast<double>(counts(rng));
        noisy[i] = -std::log(std::max(c, kMinCount) / photon_count);
    }
    return noisy;
}

Image apply_gaussian(const Image& values, double sigma, std::uint64_t seed) {
    if (!(sigma > 0.0)) throw std::invalid_argument("apply_gaussian: sigma must be positive");
    Image noisy(values.rows(), values.cols());
    for (std::size_t i = 0; i < values.size(); ++i) {
        KeyedRng rng(seed, i);
        std::normal_distribution<double> normal(0.0, sigma);
        noisy[i] = values[i] + normal(rng);
    }
    return noisy;
}

Image apply_noise(const NoiseModel& model, const Image& clean, std::uint64_t seed) {
    if (const auto* p = std::get_if<PoissonNoise>(&model)) return apply_poisson(clean, p->photon_count, seed);
    return apply_gaussian(clean, std::get<GaussianNoise>(model).sigma, seed);
}

}  // namespace n2i
