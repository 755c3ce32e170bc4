#include "n2i/infer.hpp"

#include <stdexcept>

namespace n2i {

Image noise2inverse_infer(const Denoiser& denoiser, std::span<const Image> sub_reconstructions,
                          const SplitScheme& scheme) {
    if (static_cast<int>(sub_reconstructions.size()) != scheme.k)
        throw std::invalid_argument("noise2inverse_infer: expected K sub-reconstructions");
    Image out;
    for (int j = 0; j < scheme.k; ++j) {
        const Image prediction = denoiser(mean_of(sub_reconstructions, scheme.input_indices(j)));
        if (out.empty()) out = Image(prediction.rows(), prediction.cols());
        if (!prediction.same_shape(out))
            throw std::invalid_argument("noise2inverse_infer: denoiser changed the image shape");
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += prediction[i];
    }
    for (double& v : out.values()) v /= scheme.k;
    return out;
}

Image noise2inverse_infer(const Network& network, std::span<const Image> sub_reconstructions,
                          const SplitScheme& scheme) {
    if (!network.normalization)
        throw std::invalid_argument("noise2inverse_infer: network has no stored normalization");
    if (network.scheme && *network.scheme != scheme)
        throw std::invalid_argument("noise2inverse_infer: network was trained with K = " +
                                    std::to_string(network.scheme->k) + ", strategy " +
                                    to_string(network.scheme->strategy));
    return noise2inverse_infer([&](const Image& x) { return network.denoise(x); }, sub_reconstructions,
                               scheme);
}

Image noise2self_infer(const Denoiser& denoiser, const Image& noisy, const MaskPartition& partition) {
    if (partition.stride < 1) throw std::invalid_argument("noise2self_infer: invalid partition");
    Image out(noisy.rows(), noisy.cols());
    for (int phase = 0; phase < partition.phase_count(); ++phase) {
        const MaskedInput masked = mask_partition_pairs(noisy, partition, phase);
        const Image prediction = denoiser(masked.input);
        if (!prediction.same_shape(out))
            throw std::invalid_argument("noise2self_infer: denoiser changed the image shape");
        for (std::size_t i = 0; i < out.size(); ++i)
            if (masked.target_mask[i]) out[i] = prediction[i];
    }
    return out;
}

Image noise2self_infer(const Network& network, const Image& noisy, const MaskPartition& partition) {
    return noise2self_infer([&](const Image& x) { return network.denoise(x); }, noisy, partition);
}

}  // namespace n2i
