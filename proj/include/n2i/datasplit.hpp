#pragma once

#include <span>
#include <string>
#include <vector>

#include "n2i/geometry.hpp"
#include "n2i/grid.hpp"

namespace n2i {

/// X1: input is the mean of K-1 sub-reconstructions, target the remaining one.
/// OneX: input is a single sub-reconstruction, target the mean of the rest.
enum class Strategy { x1, one_x };

std::string to_string(Strategy strategy);
/// Accepts "X1", "X:1", "1X", "1:X" (case-insensitive).
Strategy parse_strategy(const std::string& text);

struct SplitScheme {
    int k = 4;
    Strategy strategy = Strategy::x1;

    /// Sub-reconstruction indices averaged into the target of pair `section`.
    std::vector<int> target_indices(int section) const;
    /// Complement of target_indices(section).
    std::vector<int> input_indices(int section) const;
    /// The collection of target sections, one per pair.
    std::vector<std::vector<int>> target_sections() const;

    friend bool operator==(const SplitScheme&, const SplitScheme&) = default;
};

/// Validates K >= 2.
SplitScheme make_scheme(int k, Strategy strategy);

/// One training example. An empty target_mask means the loss covers every pixel.
struct DatasetPair {
    Image input;
    Image target;
    int slice_id = 0;
    int section = 0;
    Mask target_mask;
};

/// Sub-sinogram j holds angle rows j, j + K, j + 2K, ... with the matching
/// sub-geometry. Throws std::invalid_argument if K does not divide n_angles.
std::vector<Sinogram> split_sinogram(const Sinogram& sinogram, int K);

/// Interleaves sub-sinograms back into the full sinogram.
Sinogram merge_sinograms(std::span<const Sinogram> parts, const Geometry& full);

/// Mean of the selected images.
Image mean_of(std::span<const Image> images, std::span<const int> indices);

/// K pairs, pair j built from section j of the scheme.
std::vector<DatasetPair> build_pairs(std::span<const Image> sub_reconstructions,
                                     const SplitScheme& scheme, int slice_id = 0);

/// Pixel (r, c) belongs to class (r mod stride) * stride + (c mod stride).
/// For stride >= 2 no two 8-adjacent pixels share a class.
struct MaskPartition {
    int stride = 4;

    int phase_count() const { return stride * stride; }
    int phase_of(int r, int c) const { return (r % stride) * stride + (c % stride); }
    Mask class_mask(int rows, int cols, int phase) const;
};

struct MaskedInput {
    Image input;
    Mask target_mask;
};

/// Replaces the class-`phase` pixels by the mean of their in-bounds
/// 8-neighbours; the target mask marks the replaced pixels.
MaskedInput mask_partition_pairs(const Image& noisy, const MaskPartition& partition, int phase);

}  // namespace n2i
