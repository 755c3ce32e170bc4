#include "n2i/theory.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>

#include "n2i/phantom.hpp"
#include "n2i/recon.hpp"
#include "n2i/rng.hpp"

namespace n2i {
namespace {

struct Welford {
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;

    void add(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }
    Estimate estimate() const {
        const double var = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
        return {mean, std::sqrt(var / static_cast<double>(n))};
    }
};

double squared_distance(const Image& a, const Image& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

bool DecompositionReport::holds(double z) const {
    if (residual.mean == 0.0) return true;
    return std::abs(residual.mean) < z * residual.std_error;
}

TinyProblem make_tiny_problem(int image_size, int n_angles, int family_size, double sigma,
                              std::uint64_t seed) {
    if (family_size < 1) throw std::invalid_argument("make_tiny_problem: family size must be >= 1");
    if (sigma < 0.0) throw std::invalid_argument("make_tiny_problem: sigma must be >= 0");
    TinyProblem p;
    p.geometry = make_geometry(n_angles, default_detector_count(image_size), image_size);
    p.sigma = sigma;
    for (int i = 0; i < family_size; ++i) {
        const FoamPhantom foam = generate_foam(4, 0.08, 0.25, 0.9, derive_seed(seed, i));
        p.clean.push_back(analytic_sinogram(foam, p.geometry));
    }
    return p;
}

DecompositionReport decomposition_check(const TinyProblem& problem, const Denoiser& h, std::size_t n_samples,
                                std::uint64_t seed) {
    if (n_samples < 100) throw std::invalid_argument("decomposition_check: need at least 100 samples");
    if (problem.clean.empty()) throw std::invalid_argument("decomposition_check: problem has no phantom");
    const int K = problem.k;
    const SplitScheme scheme = make_scheme(K, Strategy::x1);

    // Clean sub-reconstructions x*_j for every phantom and section.
    std::vector<std::vector<Image>> clean_subs;
    for (const Sinogram& s : problem.clean) {
        std::vector<Image> subs;
        for (int j = 0; j < K; ++j) subs.push_back(sub_reconstruct(s, K, j));
        clean_subs.push_back(std::move(subs));
    }

    Welford lhs, supervised, variance, residual;
    for (std::size_t i = 0; i < n_samples; ++i) {
        KeyedRng rng(seed, i);
        const std::size_t object =
            std::uniform_int_distribution<std::size_t>(0, problem.clean.size() - 1)(rng);
        const int section = std::uniform_int_distribution<int>(0, K - 1)(rng);
        Sinogram noisy = problem.clean[object];
        if (problem.sigma > 0.0) noisy.data = apply_gaussian(noisy.data, problem.sigma, derive_seed(seed, i));

        std::vector<Image> subs;
        for (int j = 0; j < K; ++j) subs.push_back(sub_reconstruct(noisy, K, j));
        const Image input = mean_of(subs, scheme.input_indices(section));
        const Image& target = subs[section];
        const Image& clean_target = clean_subs[object][section];
        const Image prediction = h(input);

        const double a = squared_distance(prediction, target);
        const double b = squared_distance(prediction, clean_target);
        const double c = squared_distance(clean_target, target);
        lhs.add(a);
        supervised.add(b);
        variance.add(c);
        residual.add(a - b - c);
    }
    return {lhs.estimate(), supervised.estimate(), variance.estimate(), residual.estimate(), n_samples};
}

double analytic_reconstruction_variance(const TinyProblem& problem) {
    const int K = problem.k;
    const Geometry& g = problem.geometry;
    double total = 0.0;
    for (int section = 0; section < K; ++section) {
        for (int row = section; row < g.n_angles(); row += K) {
            for (int det = 0; det < g.detector_count; ++det) {
                Sinogram unit(g);
                unit.data(row, det) = 1.0;
                const Image column = sub_reconstruct(unit, K, section);
                for (double v : column.values()) total += v * v;
            }
        }
    }
    return problem.sigma * problem.sigma * total / K;
}

Denoiser random_linear_map(int image_size, std::uint64_t seed) {
    const std::size_t n = static_cast<std::size_t>(image_size) * image_size;
    auto matrix = std::make_shared<std::vector<double>>(n * n);
    std::mt19937_64 gen(derive_seed(seed, 0x6c696e));
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
    for (double& v : *matrix) v = normal(gen);
    return [matrix, n, image_size](const Image& x) {
        if (x.size() != n) throw std::invalid_argument("random_linear_map: image size mismatch");
        Image out(image_size, image_size);
        for (std::size_t r = 0; r < n; ++r) {
            double s = 0.0;
            const double* row = matrix->data() + r * n;
            for (std::size_t c = 0; c < n; ++c) s += row[c] * x[c];
            out[r] = s;
        }
        return out;
    };
}

BiasReport zero_mean_check(const NoiseModel& model, const Sinogram& clean, std::size_t n_samples,
                           std::uint64_t seed) {
    if (n_samples < 100) throw std::invalid_argument("zero_mean_check: need at least 100 samples");
    const std::size_t pixels = clean.data.size();
    std::vector<Welford> stats(pixels);
    for (std::size_t s = 0; s < n_samples; ++s) {
        const Image noisy = apply_noise(model, clean.data, derive_seed(seed, s));
        for (std::size_t i = 0; i < pixels; ++i) stats[i].add(noisy[i] - clean.data[i]);
    }
    BiasReport report;
    report.samples = n_samples;
    std::size_t exceed = 0;
    double bias_sum = 0.0, var_sum = 0.0;
    for (const Welford& w : stats) {
        const Estimate e = w.estimate();
        report.max_abs_bias = std::max(report.max_abs_bias, std::abs(e.mean));
        if (std::abs(e.mean) > 4.0 * e.std_error && e.mean != 0.0) ++exceed;
        bias_sum += e.mean;
        var_sum += e.std_error * e.std_error;
    }
    report.exceedance_fraction = static_cast<double>(exceed) / static_cast<double>(pixels);
    report.mean_bias = {bias_sum / static_cast<double>(pixels),
                        std::sqrt(var_sum) / static_cast<double>(pixels)};
    return report;
}

}  // namespace n2i
