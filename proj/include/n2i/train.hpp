#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "n2i/datasplit.hpp"
#include "n2i/grid.hpp"
#include "n2i/network.hpp"

namespace n2i {

struct TrainConfig {
    int epochs = 100;
    int batch_size = 12;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t shuffle_seed = 0;

    void validate() const;
};

struct LossValue {
    double value = 0.0;
    Image gradient;
};

/// Mean squared error over all pixels, or over the pixels set in `mask`
/// when it is non-empty. Gradient is 2 (pred - target) / n on counted pixels.
LossValue mse_loss(const Image& prediction, const Image& target, const Mask& mask = {});

/// One Adam update with bias correction. Moment buffers are created on first use.
void adam_step(Network& network, std::span<const double> gradients, const TrainConfig& config);

/// Mean and standard deviation over every pixel of the inputs.
Normalization fit_normalization(std::span<const DatasetPair> pairs);

/// Produces pair `index` for `epoch`; lets callers regenerate samples lazily
/// (for example a fresh masking phase each epoch).
using PairSource = std::function<DatasetPair(std::size_t index, int epoch)>;

/// Called after each epoch with the 1-based epoch and its mean loss.
using EpochCallback = std::function<void(int, double)>;

/// Mini-batch Adam on the pixel-wise MSE between network(input) and target,
/// in normalized units. If the network has no normalization yet it is fitted
/// on the inputs first. Returns the mean loss of each epoch. The result does
/// not depend on the worker count: per-example gradients are summed in a
/// fixed order.
std::vector<double> train(std::span<const DatasetPair> pairs, Network& network,
                          const TrainConfig& config, const EpochCallback& on_epoch = {});
std::vector<double> train(std::size_t pair_count, const PairSource& source, Network& network,
                          const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace n2i
