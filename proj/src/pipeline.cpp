#include "n2i/pipeline.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "n2i/datasplit.hpp"
#include "n2i/infer.hpp"
#include "n2i/noise.hpp"
#include "n2i/parallel.hpp"
#include "n2i/recon.hpp"
#include "n2i/rng.hpp"
#include "n2i/theory.hpp"
#include "n2i/train.hpp"

namespace n2i {
namespace {

void report(const Progress& progress, const std::string& message) {
    if (progress) progress(message);
}

double sum_squared_error(const Image& a, const Image& b, const Mask& mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!mask.empty() && !mask[i]) continue;
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::size_t mask_count(const Mask& mask) {
    std::size_t n = 0;
    for (auto v : mask.values()) n += v != 0;
    return n;
}

EpochCallback epoch_logger(const Progress& progress, const std::string& label, int epochs) {
    if (!progress) return {};
    return [progress, label, epochs](int epoch, double loss) {
        progress(label + " epoch " + std::to_string(epoch) + "/" + std::to_string(epochs) + " loss " +
                 format_number(loss));
    };
}

}  // namespace

std::uint64_t stage_seed(const RunConfig& config, Stage stage) {
    return config.stage_seed(static_cast<std::uint64_t>(stage));
}

Geometry run_geometry(const RunConfig& config) {
    const int n = config.phantom.image_size;
    const int det = config.geometry.detector_count > 0 ? config.geometry.detector_count : default_detector_count(n);
    return make_geometry(config.geometry.n_angles, det, n, config.geometry.arc_degrees * std::numbers::pi / 180.0);
}

std::vector<FoamPhantom> make_phantoms(const RunConfig& config) {
    const PhantomSpec& p = config.phantom;
    const std::uint64_t base = stage_seed(config, Stage::phantom);
    std::vector<FoamPhantom> out(p.slices);
    parallel_for(out.size(), [&](std::size_t s) {
        out[s] = generate_foam(p.bubbles, p.min_radius, p.max_radius, p.cylinder_radius, derive_seed(base, s));
    });
    return out;
}

std::vector<Sinogram> project_phantoms(std::span<const FoamPhantom> phantoms, const Geometry& geometry,
                                       double scale) {
    std::vector<Sinogram> out(phantoms.size());
    parallel_for(out.size(), [&](std::size_t s) {
        out[s] = analytic_sinogram(phantoms[s], geometry);
        for (double& v : out[s].data.values()) v *= scale;
    });
    return out;
}

double absorption_scale(std::span<const Sinogram> clean, double alpha) {
    std::vector<double> pooled;
    for (const Sinogram& s : clean) pooled.insert(pooled.end(), s.data.values().begin(), s.data.values().end());
    return calibrate_absorption(pooled, alpha);
}

std::vector<Sinogram> corrupt(const RunConfig& config, std::span<const Sinogram> clean) {
    const NoiseModel model = config.noise_model();
    const auto* gaussian = std::get_if<GaussianNoise>(&model);
    std::vector<Sinogram> out(clean.begin(), clean.end());
    if (gaussian && gaussian->domain == NoiseDomain::image) return out;
    const std::uint64_t base = stage_seed(config, Stage::noise);
    parallel_for(out.size(), [&](std::size_t s) { out[s].data = apply_noise(model, clean[s].data, derive_seed(base, s)); });
    return out;
}

SimulatedData simulate(const RunConfig& config, const Progress& progress) {
    config.validate();
    SimulatedData data;
    data.geometry = run_geometry(config);
    report(progress, "generating " + std::to_string(config.phantom.slices) + " phantoms");
    data.phantoms = make_phantoms(config);
    report(progress, "projecting");
    data.clean = project_phantoms(data.phantoms, data.geometry);
    if (config.noise.model == "poisson" && config.noise.alpha > 0.0) {
        data.scale = absorption_scale(data.clean, config.noise.alpha);
        for (Sinogram& s : data.clean)
            for (double& v : s.data.values()) v *= data.scale;
    }
    data.ground_truth.resize(data.phantoms.size());
    parallel_for(data.phantoms.size(), [&](std::size_t s) {
        data.ground_truth[s] = rasterize(data.phantoms[s], config.phantom.image_size);
        for (double& v : data.ground_truth[s].values()) v *= data.scale;
    });
    report(progress, "adding noise");
    data.noisy = corrupt(config, data.clean);
    return data;
}

std::vector<Mask> object_masks(std::span<const Image> clean) {
    std::vector<Mask> out(clean.size());
    parallel_for(out.size(), [&](std::size_t s) { out[s] = object_mask(clean[s]); });
    return out;
}

std::vector<Image> fbp_stack(std::span<const Sinogram> sinograms) {
    std::vector<Image> out(sinograms.size());
    parallel_for(out.size(), [&](std::size_t s) { out[s] = fbp(sinograms[s]); });
    return out;
}

Network make_network(const RunConfig& config) {
    NetworkConfig nc = config.network;
    nc.seed = stage_seed(config, Stage::network);
    return Network(nc);
}

TrainConfig make_train_config(const RunConfig& config) {
    TrainConfig tc = config.train;
    tc.shuffle_seed = stage_seed(config, Stage::shuffle);
    return tc;
}

Noise2InverseResult run_noise2inverse(const RunConfig& config, const SimulatedData& data, const Progress& progress) {
    config.validate();
    if (config.noise.model == "gaussian" && config.noise.domain == NoiseDomain::image)
        throw std::invalid_argument("run_noise2inverse: noise must be added in the sinogram domain");
    const int K = config.split.k;
    const std::size_t slices = data.noisy.size();

    Noise2InverseResult result{make_network(config), {}, {}, {}, {}, {}, {}, {}};
    result.network.scheme = config.split;

    report(progress, "sub-reconstructing K=" + std::to_string(K));
    std::vector<std::vector<Image>> subs(slices);
    parallel_for(slices, [&](std::size_t s) {
        for (int j = 0; j < K; ++j) subs[s].push_back(sub_reconstruct(data.noisy[s], K, j));
    });
    std::vector<DatasetPair> pairs;
    for (std::size_t s = 0; s < slices; ++s) {
        auto p = build_pairs(subs[s], config.split, static_cast<int>(s));
        pairs.insert(pairs.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
    }

    const TrainConfig cfg = make_train_config(config);
    result.losses = train(pairs, result.network, cfg,
                          epoch_logger(progress, "K=" + std::to_string(K) + " " + to_string(config.split.strategy),
                                       cfg.epochs));
    pairs.clear();

    report(progress, "inference");
    result.denoised.resize(slices);
    for (std::size_t s = 0; s < slices; ++s)
        result.denoised[s] = noise2inverse_infer(result.network, subs[s], config.split);

    result.reference = fbp_stack(data.clean);
    result.noisy_fbp.resize(slices);
    parallel_for(slices, [&](std::size_t s) {
        Image full(subs[s][0].rows(), subs[s][0].cols());
        for (const Image& sub : subs[s])
            for (std::size_t i = 0; i < full.size(); ++i) full[i] += sub[i] / K;
        result.noisy_fbp[s] = std::move(full);
    });
    result.masks = object_masks(result.reference);
    result.noisy_report = evaluate_stack(result.noisy_fbp, result.reference, result.masks);
    result.denoised_report = evaluate_stack(result.denoised, result.reference, result.masks);
    return result;
}

std::vector<MetricRow> noise2inverse_rows(const RunConfig& config, const Noise2InverseResult& result) {
    const MetricRow base{config.run_id, "", config.noise.alpha, config.noise.photon_count,
                         config.geometry.n_angles, config.split.k, to_string(config.split.strategy), 0.0, 0.0};
    MetricRow noisy = base;
    noisy.method = "noisy_fbp";
    noisy.psnr = result.noisy_report.psnr;
    noisy.ssim = result.noisy_report.ssim;
    MetricRow denoised = base;
    denoised.method = "noise2inverse";
    denoised.psnr = result.denoised_report.psnr;
    denoised.ssim = result.denoised_report.ssim;
    return {noisy, denoised};
}

std::vector<MetricRow> run_sweep(const RunConfig& config, const SimulatedData& data, const Progress& progress) {
    std::vector<MetricRow> rows;
    for (int k : {2, 4, 8}) {
        for (Strategy strategy : {Strategy::x1, Strategy::one_x}) {
            RunConfig c = config;
            c.split = make_scheme(k, strategy);
            c.run_id = config.run_id + "-K" + std::to_string(k) + "-" + to_string(strategy);
            const Noise2InverseResult r = run_noise2inverse(c, data, progress);
            rows.push_back(noise2inverse_rows(c, r)[1]);
        }
    }
    return rows;
}

BaselineResult run_baselines(const RunConfig& config, const SimulatedData& data, const Progress& progress) {
    config.validate();
    const std::size_t slices = data.noisy.size();
    BaselineResult result;
    const std::vector<Image> reference = fbp_stack(data.clean);
    const std::vector<Mask> masks = object_masks(reference);

    // Pooled squared error per SIRT iteration decides the stopping point.
    const int max_iters = config.baseline.sirt_iterations;
    std::vector<std::vector<double>> sse(slices, std::vector<double>(max_iters));
    report(progress, "SIRT, " + std::to_string(max_iters) + " iterations");
    parallel_for(slices, [&](std::size_t s) {
        sirt(data.noisy[s], max_iters,
             [&](int it, const Image& x) { sse[s][it - 1] = sum_squared_error(x, reference[s], masks[s]); });
    });
    double best = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iters; ++it) {
        double total = 0.0;
        for (std::size_t s = 0; s < slices; ++s) total += sse[s][it];
        if (total < best) {
            best = total;
            result.sirt_iterations = it + 1;
        }
    }
    result.sirt.resize(slices);
    parallel_for(slices, [&](std::size_t s) { result.sirt[s] = sirt(data.noisy[s], result.sirt_iterations); });
    result.sirt_report = evaluate_stack(result.sirt, reference, masks);

    best = std::numeric_limits<double>::infinity();
    double lambda = config.baseline.lambda_min;
    for (int i = 0; i < config.baseline.lambda_count; ++i, lambda *= config.baseline.lambda_ratio) {
        report(progress, "TV-MIN lambda " + format_number(lambda));
        std::vector<Image> out(slices);
        parallel_for(slices, [&](std::size_t s) {
            out[s] = tv_min_fista(data.noisy[s], lambda, config.baseline.tv_iterations,
                                  config.baseline.tv_inner_iterations);
        });
        double total = 0.0;
        for (std::size_t s = 0; s < slices; ++s) total += sum_squared_error(out[s], reference[s], masks[s]);
        if (total < best) {
            best = total;
            result.tv_lambda = lambda;
            result.tvmin = std::move(out);
        }
    }
    result.tv_report = evaluate_stack(result.tvmin, reference, masks);
    return result;
}

std::vector<MetricRow> baseline_rows(const RunConfig& config, const BaselineResult& result) {
    const MetricRow base{config.run_id, "", config.noise.alpha, config.noise.photon_count,
                         config.geometry.n_angles, 0, "-", 0.0, 0.0};
    MetricRow s = base;
    s.method = "sirt";
    s.psnr = result.sirt_report.psnr;
    s.ssim = result.sirt_report.ssim;
    MetricRow t = base;
    t.method = "tvmin";
    t.psnr = result.tv_report.psnr;
    t.ssim = result.tv_report.ssim;
    return {s, t};
}

namespace {

Noise2SelfCase noise2self_case(const RunConfig& config, const std::vector<Image>& noisy,
                               const std::vector<Image>& reference, const std::vector<Mask>& masks,
                               const Progress& progress, const std::string& label) {
    const MaskPartition partition{config.mask_stride};
    const std::size_t per_slice = static_cast<std::size_t>(config.masks_per_slice);
    const std::uint64_t mask_seed = stage_seed(config, Stage::mask);
    const PairSource source = [&](std::size_t index, int epoch) {
        const std::size_t slice = index / per_slice;
        KeyedRng rng(derive_seed(mask_seed, static_cast<std::uint64_t>(epoch)), index);
        const int phase = std::uniform_int_distribution<int>(0, partition.phase_count() - 1)(rng);
        MaskedInput m = mask_partition_pairs(noisy[slice], partition, phase);
        return DatasetPair{std::move(m.input), noisy[slice], static_cast<int>(slice), phase, std::move(m.target_mask)};
    };

    Noise2SelfCase result;
    Network network = make_network(config);
    const TrainConfig cfg = make_train_config(config);
    result.losses = train(noisy.size() * per_slice, source, network, cfg, epoch_logger(progress, label, cfg.epochs));
    std::vector<Image> denoised(noisy.size());
    for (std::size_t s = 0; s < noisy.size(); ++s) denoised[s] = noise2self_infer(network, noisy[s], partition);
    result.noisy_report = evaluate_stack(noisy, reference, masks);
    result.denoised_report = evaluate_stack(denoised, reference, masks);
    return result;
}

}  // namespace

Noise2SelfResult run_noise2self_experiment(const RunConfig& config, const SimulatedData& data,
                                           const Progress& progress) {
    config.validate();
    if (config.noise.model != "gaussian" || config.noise.domain != NoiseDomain::sinogram)
        throw std::invalid_argument("noise2self experiment needs Gaussian sinogram-domain noise");
    const std::vector<Image> reference = fbp_stack(data.clean);
    const std::vector<Image> coupled = fbp_stack(data.noisy);
    const std::vector<Mask> masks = object_masks(reference);

    double sse = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < reference.size(); ++s) {
        sse += sum_squared_error(coupled[s], reference[s], masks[s]);
        count += mask_count(masks[s]);
    }
    Noise2SelfResult result;
    result.image_sigma = std::sqrt(sse / static_cast<double>(count));

    const std::uint64_t base = stage_seed(config, Stage::image_noise);
    std::vector<Image> independent(reference.size());
    parallel_for(reference.size(), [&](std::size_t s) {
        independent[s] = apply_gaussian(reference[s], result.image_sigma, derive_seed(base, s));
    });

    result.image_domain = noise2self_case(config, independent, reference, masks, progress, "noise2self image");
    result.sinogram_domain = noise2self_case(config, coupled, reference, masks, progress, "noise2self sinogram");
    return result;
}

std::vector<MetricRow> noise2self_rows(const RunConfig& config, const Noise2SelfResult& result) {
    const MetricRow base{config.run_id, "", 0.0, 0.0, config.geometry.n_angles, 0, "-", 0.0, 0.0};
    std::vector<MetricRow> rows;
    auto add = [&](const std::string& method, const MetricReport& r) {
        MetricRow row = base;
        row.method = method;
        row.psnr = r.psnr;
        row.ssim = r.ssim;
        rows.push_back(row);
    };
    add("noisy_image_domain", result.image_domain.noisy_report);
    add("noise2self_image_domain", result.image_domain.denoised_report);
    add("noisy_sinogram_domain", result.sinogram_domain.noisy_report);
    add("noise2self_sinogram_domain", result.sinogram_domain.denoised_report);
    return rows;
}

std::vector<TheoryRow> run_theory(std::size_t samples, std::uint64_t seed, double sigma, int family_size) {
    const TinyProblem problem = make_tiny_problem(16, 32, family_size, sigma, derive_seed(seed, 1));
    const std::vector<std::pair<std::string, Denoiser>> maps = {
        {"zero", [](const Image& x) { return Image(x.rows(), x.cols()); }},
        {"identity", [](const Image& x) { return x; }},
        {"linear", random_linear_map(16, derive_seed(seed, 2))},
    };
    std::vector<TheoryRow> rows;
    for (const auto& [name, h] : maps) {
        const DecompositionReport r = decomposition_check(problem, h, samples, derive_seed(seed, 3));
        rows.push_back({name + ".lhs", r.lhs.mean, r.lhs.std_error});
        rows.push_back({name + ".supervised", r.supervised.mean, r.supervised.std_error});
        rows.push_back({name + ".variance", r.variance.mean, r.variance.std_error});
        rows.push_back({name + ".residual", r.residual.mean, r.residual.std_error});
    }
    rows.push_back({"analytic_variance", analytic_reconstruction_variance(problem), 0.0});
    return rows;
}

}  // namespace n2i
