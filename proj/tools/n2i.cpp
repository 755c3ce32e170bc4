#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "n2i/config.hpp"
#include "n2i/datasplit.hpp"
#include "n2i/infer.hpp"
#include "n2i/io.hpp"
#include "n2i/metrics.hpp"
#include "n2i/network.hpp"
#include "n2i/noise.hpp"
#include "n2i/phantom.hpp"
#include "n2i/pipeline.hpp"
#include "n2i/recon.hpp"
#include "n2i/train.hpp"

namespace fs = std::filesystem;
using namespace n2i;

namespace {

void say(const std::string& message) { std::cerr << message << '\n'; }

struct Loaded {
    RunConfig config;
    std::string hash;
};

Loaded load(const std::string& path) {
    Loaded l{load_config(path), {}};
    l.hash = config_hash(l.config);
    return l;
}

Stack read_checked(const std::string& path, const std::string& hash) {
    Stack s = read_stack(path);
    if (s.meta.config_hash != hash)
        throw std::runtime_error(path + " was produced under config " + s.meta.config_hash + ", expected " + hash);
    return s;
}

void ensure_parent(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

void write_images(const std::string& path, std::span<const Image> images, const std::string& stage,
                  const std::string& hash) {
    ensure_parent(path);
    ArtifactMeta meta;
    meta.stage = stage;
    meta.config_hash = hash;
    write_stack(path, images, meta);
}

void write_sinograms(const std::string& path, std::span<const Sinogram> sinos, const std::string& stage,
                     const std::string& hash) {
    std::vector<Image> data;
    for (const Sinogram& s : sinos) data.push_back(s.data);
    ensure_parent(path);
    ArtifactMeta meta;
    meta.stage = stage;
    meta.config_hash = hash;
    meta.geometry = sinos.front().geometry;
    write_stack(path, data, meta);
}

std::string phantom_file(const std::string& dir, std::size_t slice) {
    char name[32];
    std::snprintf(name, sizeof name, "slice_%04zu.txt", slice);
    return (fs::path(dir) / name).string();
}

/// Sub-reconstruction files become per-slice lists of K images.
std::vector<std::vector<Image>> read_subrecons(const std::vector<std::string>& paths, const std::string& hash,
                                               int k) {
    if (static_cast<int>(paths.size()) != k)
        throw std::runtime_error("expected " + std::to_string(k) + " sub-reconstruction files, got " +
                                 std::to_string(paths.size()));
    std::vector<std::vector<Image>> per_slice;
    for (const std::string& p : paths) {
        Stack s = read_checked(p, hash);
        if (per_slice.empty()) per_slice.resize(s.slices.size());
        if (s.slices.size() != per_slice.size()) throw std::runtime_error(p + ": slice count differs");
        for (std::size_t i = 0; i < s.slices.size(); ++i) per_slice[i].push_back(std::move(s.slices[i]));
    }
    return per_slice;
}

std::string join_paths(const std::vector<std::string>& paths, const std::vector<int>& indices) {
    std::string out;
    for (int i : indices) out += (out.empty() ? "" : "+") + paths[i];
    return out;
}

/// One line per training pair: slice id, section, input files, target files.
/// A '+' joins files that are averaged.
std::string pair_manifest(const std::vector<std::string>& paths, std::size_t slices, const SplitScheme& scheme) {
    std::string out = "slice_id section input target\n";
    for (std::size_t s = 0; s < slices; ++s)
        for (int j = 0; j < scheme.k; ++j)
            out += std::to_string(s) + ' ' + std::to_string(j) + ' ' + join_paths(paths, scheme.input_indices(j)) +
                   ' ' + join_paths(paths, scheme.target_indices(j)) + '\n';
    return out;
}

void write_csv(const std::string& path, const std::string& text) {
    ensure_parent(path);
    write_text(path, text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Noise2Inverse CT denoising toolkit"};
    app.require_subcommand(1);

    std::string config_path, input, output, reference, ground_truth, model_path, method = "output", loss_path;
    std::vector<std::string> inputs;
    int iterations = 50, inner = 20;
    double lambda = 0.01;
    std::size_t samples = 10000;
    std::uint64_t seed = 7;
    double sigma = 0.1;
    bool baselines = false, png = false;

    auto add_config = [&](CLI::App* cmd) { cmd->add_option("-c,--config", config_path, "Run config file")->required()->check(CLI::ExistingFile); };

    auto* phantom = app.add_subcommand("phantom", "Generate foam phantoms, one text file per slice");
    add_config(phantom);
    phantom->add_option("-o,--out", output, "Output directory")->required();

    auto* project = app.add_subcommand("project", "Project phantoms to clean sinograms and a ground-truth stack");
    add_config(project);
    project->add_option("-i,--in", input, "Phantom directory")->required()->check(CLI::ExistingDirectory);
    project->add_option("-o,--out", output, "Clean sinogram stack")->required();
    project->add_option("-g,--ground-truth", ground_truth, "Ground-truth image stack")->required();

    auto* corrupt_cmd = app.add_subcommand("corrupt", "Add the configured noise to a sinogram stack");
    add_config(corrupt_cmd);
    corrupt_cmd->add_option("-i,--in", input, "Clean sinogram stack")->required()->check(CLI::ExistingFile);
    corrupt_cmd->add_option("-o,--out", output, "Noisy sinogram stack")->required();

    auto* split = app.add_subcommand("split", "Split sinograms into K angular sections");
    add_config(split);
    split->add_option("-i,--in", input, "Sinogram stack")->required()->check(CLI::ExistingFile);
    split->add_option("-o,--out", output, "Output prefix; writes <prefix>_<j>.raw")->required();

    auto* reconstruct = app.add_subcommand("reconstruct", "Reconstruct a sinogram stack");
    reconstruct->require_subcommand(1);
    std::vector<CLI::App*> recon_cmds;
    for (const char* name : {"fbp", "sirt", "tvmin"}) {
        auto* r = reconstruct->add_subcommand(name, std::string(name) + " reconstruction");
        add_config(r);
        r->add_option("-i,--in", input, "Sinogram stack")->required()->check(CLI::ExistingFile);
        r->add_option("-o,--out", output, "Image stack")->required();
        recon_cmds.push_back(r);
    }
    recon_cmds[1]->add_option("--iterations", iterations, "SIRT iterations")->check(CLI::PositiveNumber);
    recon_cmds[2]->add_option("--iterations", iterations, "FISTA iterations")->check(CLI::PositiveNumber);
    recon_cmds[2]->add_option("--inner", inner, "Dual iterations of the TV prox")->check(CLI::PositiveNumber);
    recon_cmds[2]->add_option("--lambda", lambda, "TV weight")->check(CLI::NonNegativeNumber);

    auto* train_cmd = app.add_subcommand("train", "Train a denoiser on sub-reconstructions");
    add_config(train_cmd);
    train_cmd->add_option("-i,--in", inputs, "K sub-reconstruction stacks in section order")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("-o,--out", model_path, "Checkpoint")->required();
    train_cmd->add_option("--loss", loss_path, "Per-epoch loss CSV");

    auto* infer = app.add_subcommand("infer", "Apply a trained network with section-wise averaging");
    add_config(infer);
    infer->add_option("-i,--in", inputs, "K sub-reconstruction stacks in section order")->required()->check(CLI::ExistingFile);
    infer->add_option("-m,--model", model_path, "Checkpoint")->required()->check(CLI::ExistingFile);
    infer->add_option("-o,--out", output, "Denoised image stack")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Masked PSNR and SSIM of an image stack");
    add_config(evaluate);
    evaluate->add_option("-i,--in", input, "Image stack to score")->required()->check(CLI::ExistingFile);
    evaluate->add_option("-r,--reference", reference, "Clean reference stack; also defines the object mask")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--method", method, "Method label for the CSV row");
    evaluate->add_option("-o,--out", output, "Metrics CSV")->required();
    evaluate->add_flag("--png", png, "Also write <out>.png of the first slice");

    auto* run = app.add_subcommand("run", "Simulate, train, infer and evaluate in one process");
    add_config(run);
    run->add_option("-o,--out", output, "Output directory (defaults to run.output)");
    run->add_flag("--baselines", baselines, "Also score SIRT and TV-MIN");

    auto* sweep = app.add_subcommand("sweep", "Noise2Inverse over K in {2,4,8} and both strategies");
    add_config(sweep);
    sweep->add_option("-o,--out", output, "Metrics CSV")->required();

    auto* theory = app.add_subcommand("theory", "Monte-Carlo check of the prediction error decomposition");
    theory->add_option("--samples", samples, "Monte-Carlo samples (>= 100)");
    theory->add_option("--seed", seed, "Seed");
    theory->add_option("--sigma", sigma, "Sinogram noise standard deviation")->check(CLI::NonNegativeNumber);
    theory->add_option("-o,--out", output, "Theory CSV (stdout if omitted)");

    auto* noise2self = app.add_subcommand("noise2self", "Masking denoiser on independent vs reconstruction-coupled noise");
    add_config(noise2self);
    noise2self->add_option("-o,--out", output, "Metrics CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (phantom->parsed()) {
            const Loaded l = load(config_path);
            fs::create_directories(output);
            const auto phantoms = make_phantoms(l.config);
            for (std::size_t s = 0; s < phantoms.size(); ++s) {
                std::ofstream out(phantom_file(output, s));
                write_phantom(out, phantoms[s]);
                if (!out) throw std::runtime_error("cannot write " + phantom_file(output, s));
            }
            say("wrote " + std::to_string(phantoms.size()) + " phantoms to " + output);
        } else if (project->parsed()) {
            const Loaded l = load(config_path);
            std::vector<FoamPhantom> phantoms;
            for (int s = 0; s < l.config.phantom.slices; ++s) {
                std::ifstream in(phantom_file(input, s));
                if (!in) throw std::runtime_error("missing " + phantom_file(input, s));
                phantoms.push_back(read_phantom(in));
            }
            const Geometry g = run_geometry(l.config);
            std::vector<Sinogram> clean = project_phantoms(phantoms, g);
            double scale = 1.0;
            if (l.config.noise.model == "poisson" && l.config.noise.alpha > 0.0) {
                scale = absorption_scale(clean, l.config.noise.alpha);
                clean = project_phantoms(phantoms, g, scale);
            }
            std::vector<Image> truth;
            for (const FoamPhantom& p : phantoms) {
                truth.push_back(rasterize(p, l.config.phantom.image_size));
                for (double& v : truth.back().values()) v *= scale;
            }
            write_sinograms(output, clean, "clean_sinogram", l.hash);
            write_images(ground_truth, truth, "ground_truth", l.hash);
            say("absorption scale " + format_number(scale));
        } else if (corrupt_cmd->parsed()) {
            const Loaded l = load(config_path);
            const auto clean = stack_sinograms(read_checked(input, l.hash));
            write_sinograms(output, corrupt(l.config, clean), "noisy_sinogram", l.hash);
        } else if (split->parsed()) {
            const Loaded l = load(config_path);
            const auto sinos = stack_sinograms(read_checked(input, l.hash));
            const int k = l.config.split.k;
            std::vector<std::vector<Sinogram>> parts(k);
            for (const Sinogram& s : sinos) {
                auto sub = split_sinogram(s, k);
                for (int j = 0; j < k; ++j) parts[j].push_back(std::move(sub[j]));
            }
            for (int j = 0; j < k; ++j)
                write_sinograms(output + "_" + std::to_string(j) + ".raw", parts[j], "sub_sinogram", l.hash);
        } else if (reconstruct->parsed()) {
            const Loaded l = load(config_path);
            const auto sinos = stack_sinograms(read_checked(input, l.hash));
            std::vector<Image> out;
            std::string stage;
            if (recon_cmds[0]->parsed()) {
                out = fbp_stack(sinos);
                stage = "fbp";
            } else if (recon_cmds[1]->parsed()) {
                for (const Sinogram& s : sinos) out.push_back(sirt(s, iterations));
                stage = "sirt";
            } else {
                for (const Sinogram& s : sinos) out.push_back(tv_min_fista(s, lambda, iterations, inner));
                stage = "tvmin";
            }
            write_images(output, out, stage, l.hash);
        } else if (train_cmd->parsed()) {
            const Loaded l = load(config_path);
            const auto subs = read_subrecons(inputs, l.hash, l.config.split.k);
            std::vector<DatasetPair> pairs;
            for (std::size_t s = 0; s < subs.size(); ++s) {
                auto p = build_pairs(subs[s], l.config.split, static_cast<int>(s));
                pairs.insert(pairs.end(), p.begin(), p.end());
            }
            Network net = make_network(l.config);
            net.scheme = l.config.split;
            const TrainConfig cfg = make_train_config(l.config);
            const auto losses = n2i::train(pairs, net, cfg, [&](int epoch, double loss) {
                say("epoch " + std::to_string(epoch) + "/" + std::to_string(cfg.epochs) + " loss " + format_number(loss));
            });
            ensure_parent(model_path);
            std::ofstream out(model_path, std::ios::binary);
            net.save(out);
            if (!out) throw std::runtime_error("cannot write " + model_path);
            ArtifactMeta meta;
            meta.dtype = "checkpoint";
            meta.stage = "model";
            meta.config_hash = l.hash;
            write_sidecar(model_path, meta);
            if (!loss_path.empty()) write_csv(loss_path, loss_csv(losses));
            write_text(model_path + ".pairs.txt", pair_manifest(inputs, subs.size(), l.config.split));
        } else if (infer->parsed()) {
            const Loaded l = load(config_path);
            const ArtifactMeta meta = read_sidecar(model_path);
            if (meta.config_hash != l.hash) throw std::runtime_error(model_path + " was trained under a different config");
            std::ifstream in(model_path, std::ios::binary);
            const Network net = Network::load(in);
            const auto subs = read_subrecons(inputs, l.hash, l.config.split.k);
            std::vector<Image> out;
            for (const auto& s : subs) out.push_back(noise2inverse_infer(net, s, l.config.split));
            write_images(output, out, "denoised", l.hash);
        } else if (evaluate->parsed()) {
            const Loaded l = load(config_path);
            const Stack images = read_checked(input, l.hash);
            const Stack refs = read_checked(reference, l.hash);
            if (images.slices.size() != refs.slices.size()) throw std::runtime_error("evaluate: slice counts differ");
            const auto masks = object_masks(refs.slices);
            const MetricReport r = evaluate_stack(images.slices, refs.slices, masks);
            const MetricRow row{l.config.run_id, method, l.config.noise.alpha, l.config.noise.photon_count,
                                l.config.geometry.n_angles, l.config.split.k, to_string(l.config.split.strategy),
                                r.psnr, r.ssim};
            write_csv(output, metrics_csv(std::span(&row, 1)));
            if (png) write_png(output + ".png", images.slices.front(), r.range.min, r.range.max);
            say(r.mask_descriptor + ": psnr " + format_number(r.psnr) + " ssim " + format_number(r.ssim));
        } else if (run->parsed()) {
            const Loaded l = load(config_path);
            const fs::path dir = output.empty() ? fs::path(l.config.output) : fs::path(output);
            fs::create_directories(dir);
            write_text((dir / "config.txt").string(), write_config(l.config));
            const SimulatedData data = simulate(l.config, say);
            const Noise2InverseResult r = run_noise2inverse(l.config, data, say);
            std::vector<MetricRow> rows = noise2inverse_rows(l.config, r);
            if (baselines) {
                const auto b = baseline_rows(l.config, run_baselines(l.config, data, say));
                rows.insert(rows.end(), b.begin(), b.end());
            }
            write_text((dir / "metrics.csv").string(), metrics_csv(rows));
            write_text((dir / "loss.csv").string(), loss_csv(r.losses));
            std::ofstream ckpt(dir / "model.ckpt", std::ios::binary);
            r.network.save(ckpt);
            ArtifactMeta meta;
            meta.dtype = "checkpoint";
            meta.stage = "model";
            meta.config_hash = l.hash;
            write_sidecar((dir / "model.ckpt").string(), meta);
            write_images((dir / "denoised.raw").string(), r.denoised, "denoised", l.hash);
            write_images((dir / "reference.raw").string(), r.reference, "clean_fbp", l.hash);
            write_png((dir / "denoised_0.png").string(), r.denoised.front(), r.denoised_report.range.min,
                      r.denoised_report.range.max);
            std::cout << metrics_csv(rows);
        } else if (sweep->parsed()) {
            const Loaded l = load(config_path);
            const SimulatedData data = simulate(l.config, say);
            write_csv(output, metrics_csv(run_sweep(l.config, data, say)));
        } else if (theory->parsed()) {
            const std::string csv = theory_csv(run_theory(samples, seed, sigma));
            if (output.empty()) std::cout << csv;
            else write_csv(output, csv);
        } else if (noise2self->parsed()) {
            const Loaded l = load(config_path);
            const SimulatedData data = simulate(l.config, say);
            const Noise2SelfResult r = run_noise2self_experiment(l.config, data, say);
            say("image-domain sigma " + format_number(r.image_sigma));
            write_csv(output, metrics_csv(noise2self_rows(l.config, r)));
        }
    } catch (const std::exception& e) {
        std::cerr << "n2i: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
