#include "n2i/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "n2i/parallel.hpp"
#include "n2i/rng.hpp"

namespace n2i {

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be positive");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch size must be positive");
    if (learning_rate < 0.0) throw std::invalid_argument("TrainConfig: learning rate must be >= 0");
}

LossValue mse_loss(const Image& prediction, const Image& target, const Mask& mask) {
    if (!prediction.same_shape(target)) throw std::invalid_argument("mse_loss: shape mismatch");
    const bool masked = !mask.empty();
    if (masked && !mask.same_shape(prediction)) throw std::invalid_argument("mse_loss: mask shape mismatch");
    std::size_t count = 0;
    for (std::size_t i = 0; i < prediction.size(); ++i)
        if (!masked || mask[i]) ++count;
    if (count == 0) throw std::invalid_argument("mse_loss: no pixels selected");

    LossValue loss{0.0, Image(prediction.rows(), prediction.cols())};
    const double scale = 2.0 / static_cast<double>(count);
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        if (masked && !mask[i]) continue;
        const double diff = prediction[i] - target[i];
        loss.value += diff * diff;
        loss.gradient[i] = scale * diff;
    }
    loss.value /= static_cast<double>(count);
    return loss;
}

void adam_step(Network& network, std::span<const double> gradients, const TrainConfig& config) {
    auto params = network.parameters();
    if (gradients.size() != params.size()) throw std::invalid_argument("adam_step: gradient size mismatch");
    AdamState& s = network.adam;
    if (s.first_moment.size() != params.size()) {
        s.first_moment.assign(params.size(), 0.0);
        s.second_moment.assign(params.size(), 0.0);
        s.step = 0;
    }
    ++s.step;
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(s.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = gradients[i];
        s.first_moment[i] = config.beta1 * s.first_moment[i] + (1.0 - config.beta1) * g;
        s.second_moment[i] = config.beta2 * s.second_moment[i] + (1.0 - config.beta2) * g * g;
        const double m_hat = s.first_moment[i] / c1;
        const double v_hat = s.second_moment[i] / c2;
        params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
}

namespace {

struct Moments {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t count = 0;

    void add(const Image& img) {
        for (double v : img.values()) {
            sum += v;
            sum_sq += v * v;
        }
        count += img.size();
    }
    Normalization finish() const {
        const double mean = sum / static_cast<double>(count);
        const double var = std::max(0.0, sum_sq / static_cast<double>(count) - mean * mean);
        const double sd = std::sqrt(var);
        return {mean, sd > 0.0 ? sd : 1.0};
    }
};

Image normalize(const Image& img, const Normalization& n) {
    Image out(img.rows(), img.cols());
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = (img[i] - n.mean) / n.scale;
    return out;
}

}  // namespace

Normalization fit_normalization(std::span<const DatasetPair> pairs) {
    if (pairs.empty()) throw std::invalid_argument("fit_normalization: empty dataset");
    Moments m;
    for (const auto& p : pairs) m.add(p.input);
    return m.finish();
}

std::vector<double> train(std::span<const DatasetPair> pairs, Network& network,
                          const TrainConfig& config, const EpochCallback& on_epoch) {
    if (pairs.empty()) throw std::invalid_argument("train: empty dataset");
    if (!network.normalization) network.normalization = fit_normalization(pairs);
    return train(
        pairs.size(), [&](std::size_t i, int) { return pairs[i]; }, network, config, on_epoch);
}

std::vector<double> train(std::size_t pair_count, const PairSource& source, Network& network,
                          const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    if (pair_count == 0) throw std::invalid_argument("train: empty dataset");
    if (!network.normalization) {
        Moments m;
        for (std::size_t i = 0; i < pair_count; ++i) m.add(source(i, 0).input);
        network.normalization = m.finish();
    }
    const Normalization norm = *network.normalization;
    const std::size_t n_params = network.parameters().size();
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);

    std::vector<std::size_t> order(pair_count);
    std::vector<std::vector<double>> example_grads(batch, std::vector<double>(n_params));
    std::vector<double> example_loss(batch);
    std::vector<double> batch_grad(n_params);
    std::vector<double> log;
    log.reserve(config.epochs);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 gen(derive_seed(config.shuffle_seed, static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), gen);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < pair_count; start += batch) {
            const std::size_t size = std::min(batch, pair_count - start);
            const double inv_size = 1.0 / static_cast<double>(size);
            parallel_for(size, [&](std::size_t b) {
                const DatasetPair pair = source(order[start + b], epoch);
                Trace trace;
                const Image prediction = network.forward(normalize(pair.input, norm), trace);
                LossValue loss = mse_loss(prediction, normalize(pair.target, norm), pair.target_mask);
                for (double& g : loss.gradient.values()) g *= inv_size;
                std::fill(example_grads[b].begin(), example_grads[b].end(), 0.0);
                network.backward(trace, loss.gradient, example_grads[b]);
                example_loss[b] = loss.value;
            });
            std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
            for (std::size_t b = 0; b < size; ++b) {
                for (std::size_t i = 0; i < n_params; ++i) batch_grad[i] += example_grads[b][i];
                epoch_loss += example_loss[b];
            }
            adam_step(network, batch_grad, config);
        }
        const double mean_loss = epoch_loss / static_cast<double>(pair_count);
        log.push_back(mean_loss);
        if (on_epoch) on_epoch(epoch, mean_loss);
    }
    return log;
}

}  // namespace n2i
