#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "n2i/config.hpp"
#include "n2i/geometry.hpp"
#include "n2i/io.hpp"
#include "n2i/metrics.hpp"
#include "n2i/network.hpp"
#include "n2i/phantom.hpp"

namespace n2i {

/// Sub-streams of RunConfig::seed.
enum class Stage : std::uint64_t {
    phantom = 1,
    noise = 2,
    network = 3,
    shuffle = 4,
    mask = 5,
    image_noise = 6,
};

std::uint64_t stage_seed(const RunConfig& config, Stage stage);

/// Free-form progress messages for the CLI.
using Progress = std::function<void(const std::string&)>;

Geometry run_geometry(const RunConfig& config);

/// One foam phantom per slice, seeded per slice from the phantom stage.
std::vector<FoamPhantom> make_phantoms(const RunConfig& config);

/// Analytic sinograms multiplied by `scale`.
std::vector<Sinogram> project_phantoms(std::span<const FoamPhantom> phantoms, const Geometry& geometry,
                                       double scale = 1.0);

/// Scale that brings the pooled absorption of the sinograms to `alpha`.
double absorption_scale(std::span<const Sinogram> clean, double alpha);

/// Sinogram-domain noise from the config's model, slice s keyed by s.
/// Image-domain Gaussian noise leaves the sinograms untouched.
std::vector<Sinogram> corrupt(const RunConfig& config, std::span<const Sinogram> clean);

struct SimulatedData {
    Geometry geometry;
    std::vector<FoamPhantom> phantoms;
    double scale = 1.0;
    /// Rasterized phantoms times scale.
    std::vector<Image> ground_truth;
    std::vector<Sinogram> clean;
    std::vector<Sinogram> noisy;
};

/// Phantoms, projection, absorption calibration (Poisson model with
/// alpha > 0) and noise.
SimulatedData simulate(const RunConfig& config, const Progress& progress = {});

/// Object masks of the clean reconstructions, one per slice.
std::vector<Mask> object_masks(std::span<const Image> clean);

std::vector<Image> fbp_stack(std::span<const Sinogram> sinograms);

/// The network and shuffle seeds come from the global seed.
Network make_network(const RunConfig& config);
TrainConfig make_train_config(const RunConfig& config);

struct Noise2InverseResult {
    Network network;
    std::vector<double> losses;
    std::vector<Image> reference;
    std::vector<Image> noisy_fbp;
    std::vector<Image> denoised;
    std::vector<Mask> masks;
    MetricReport noisy_report;
    MetricReport denoised_report;
};

/// Split, sub-reconstruct, train and apply the section-wise averaged
/// network. Metrics compare against the FBP of the clean sinograms inside the
/// object masks. Throws std::invalid_argument for image-domain noise.
Noise2InverseResult run_noise2inverse(const RunConfig& config, const SimulatedData& data,
                                      const Progress& progress = {});

/// Rows "noisy_fbp" and "noise2inverse".
std::vector<MetricRow> noise2inverse_rows(const RunConfig& config, const Noise2InverseResult& result);

/// One noise2inverse row per (K, strategy) with K in {2, 4, 8} and both
/// strategies, all trained on the same simulated data.
std::vector<MetricRow> run_sweep(const RunConfig& config, const SimulatedData& data,
                                 const Progress& progress = {});

struct BaselineResult {
    int sirt_iterations = 0;
    double tv_lambda = 0.0;
    std::vector<Image> sirt;
    std::vector<Image> tvmin;
    MetricReport sirt_report;
    MetricReport tv_report;
};

/// SIRT stopped at the iteration with the best pooled PSNR and TV-MIN with
/// the best lambda of the exponential grid, both scored against the clean
/// FBP.
BaselineResult run_baselines(const RunConfig& config, const SimulatedData& data, const Progress& progress = {});
std::vector<MetricRow> baseline_rows(const RunConfig& config, const BaselineResult& result);

struct Noise2SelfCase {
    std::vector<double> losses;
    MetricReport noisy_report;
    MetricReport denoised_report;
    double improvement() const { return denoised_report.psnr - noisy_report.psnr; }
};

struct Noise2SelfResult {
    /// Standard deviation of the image-domain noise, chosen so its masked
    /// MSE matches the sinogram-domain reconstruction noise.
    double image_sigma = 0.0;
    Noise2SelfCase image_domain;
    Noise2SelfCase sinogram_domain;
};

/// Trains one masking network on FBP(noisy sinogram) and one on
/// FBP(clean sinogram) + i.i.d. Gaussian noise, with identical seeds.
/// Requires Gaussian sinogram-domain noise in the config.
Noise2SelfResult run_noise2self_experiment(const RunConfig& config, const SimulatedData& data,
                                           const Progress& progress = {});
std::vector<MetricRow> noise2self_rows(const RunConfig& config, const Noise2SelfResult& result);

/// Decomposition estimates for the zero, identity and random linear maps on
/// the 16x16, 32-angle, K = 2 problem, plus the analytic variance.
std::vector<TheoryRow> run_theory(std::size_t samples, std::uint64_t seed, double sigma = 0.1,
                                  int family_size = 4);

}  // namespace n2i
