#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "n2i/datasplit.hpp"
#include "n2i/grid.hpp"

namespace n2i {

/// Densely connected single-channel network: hidden layer i (0-based) applies
/// a 3x3 convolution dilated by 1 + (i mod dilation_cycle) to the input and
/// all earlier hidden outputs, then ReLU. A 1x1 linear layer combines the
/// input and every hidden output. Borders use reflection padding.
struct NetworkConfig {
    int depth = 20;
    int dilation_cycle = 5;
    std::uint64_t seed = 0;

    int dilation(int layer) const { return 1 + (layer % dilation_cycle); }
    int max_dilation() const;
    /// sum_{i=1..L} (9 i + 1) + (L + 1) + 1.
    std::size_t parameter_count() const;
    void validate() const;
};

/// Affine map applied before the network, (x - mean) / scale, and inverted after.
struct Normalization {
    double mean = 0.0;
    double scale = 1.0;

    friend bool operator==(const Normalization&, const Normalization&) = default;
};

struct AdamState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    long step = 0;
};

/// Activations recorded by a forward pass for use by backward.
class Trace {
public:
    bool empty() const { return features_.empty(); }

private:
    friend class Network;
    int rows_ = 0;
    int cols_ = 0;
    int pad_ = 0;
    // Reflection-padded feature maps: input, then each hidden output.
    std::vector<std::vector<double>> features_;
};

class Network {
public:
    /// He-scaled Gaussian weights, zero biases, deterministic per config.seed.
    explicit Network(const NetworkConfig& config);

    const NetworkConfig& config() const { return config_; }

    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }

    /// 9 * (layer + 1) weights laid out [input channel][3 x 3 tap, row-major].
    std::span<double> layer_weights(int layer);
    double& layer_bias(int layer);
    /// depth + 1 weights, one per channel (input first).
    std::span<double> output_weights();
    double& output_bias();

    /// Raw network map, no normalization.
    Image forward(const Image& input) const;
    Image forward(const Image& input, Trace& trace) const;

    /// Accumulates d(loss)/d(parameters) into `gradients` given d(loss)/d(output).
    /// Throws std::logic_error if `trace` holds no forward pass.
    void backward(const Trace& trace, const Image& output_gradient, std::span<double> gradients) const;

    /// Normalizes, applies the network, and maps back to input units.
    Image denoise(const Image& input) const;

    std::optional<Normalization> normalization;
    /// Split scheme the network was trained for, if any.
    std::optional<SplitScheme> scheme;
    AdamState adam;

    void save(std::ostream& out) const;
    static Network load(std::istream& in);

private:
    std::size_t layer_offset(int layer) const;
    std::size_t output_offset() const;

    NetworkConfig config_;
    std::vector<double> params_;
};

}  // namespace n2i
