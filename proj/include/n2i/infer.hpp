#pragma once

#include <functional>
#include <span>

#include "n2i/datasplit.hpp"
#include "n2i/grid.hpp"
#include "n2i/network.hpp"

namespace n2i {

using Denoiser = std::function<Image(const Image&)>;

/// Section-wise average: (1/K) sum_J f(mean of the input sub-reconstructions
/// of section J), with inputs assembled exactly as build_pairs does.
Image noise2inverse_infer(const Denoiser& denoiser, std::span<const Image> sub_reconstructions,
                          const SplitScheme& scheme);

/// Uses network.denoise. Throws std::invalid_argument when the network was
/// trained for a different scheme or carries no normalization.
Image noise2inverse_infer(const Network& network, std::span<const Image> sub_reconstructions,
                          const SplitScheme& scheme);

/// Section-wise combination: every class of the partition takes its values
/// from the denoiser applied to the input masked on that class.
Image noise2self_infer(const Denoiser& denoiser, const Image& noisy, const MaskPartition& partition);
Image noise2self_infer(const Network& network, const Image& noisy, const MaskPartition& partition);

}  // namespace n2i
