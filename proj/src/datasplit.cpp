#include "n2i/datasplit.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace n2i {

std::string to_string(Strategy strategy) { return strategy == Strategy::x1 ? "X1" : "1X"; }

Strategy parse_strategy(const std::string& text) {
    std::string s;
    for (char ch : text)
        if (ch != ':') s.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    if (s == "X1") return Strategy::x1;
    if (s == "1X") return Strategy::one_x;
    throw std::invalid_argument("unknown split strategy '" + text + "'");
}

SplitScheme make_scheme(int k, Strategy strategy) {
    if (k < 2) throw std::invalid_argument("make_scheme: K must be >= 2");
    return {k, strategy};
}

std::vector<int> SplitScheme::target_indices(int section) const {
    if (section < 0 || section >= k) throw std::invalid_argument("SplitScheme: section out of range");
    if (strategy == Strategy::x1) return {section};
    std::vector<int> out;
    for (int j = 0; j < k; ++j)
        if (j != section) out.push_back(j);
    return out;
}

std::vector<int> SplitScheme::input_indices(int section) const {
    const auto target = target_indices(section);
    std::vector<int> out;
    for (int j = 0; j < k; ++j)
        if (std::find(target.begin(), target.end(), j) == target.end()) out.push_back(j);
    return out;
}

std::vector<std::vector<int>> SplitScheme::target_sections() const {
    std::vector<std::vector<int>> out;
    for (int j = 0; j < k; ++j) out.push_back(target_indices(j));
    return out;
}

std::vector<Sinogram> split_sinogram(const Sinogram& sinogram, int K) {
    const Geometry& g = sinogram.geometry;
    if (K < 1 || g.n_angles() % K != 0)
        throw std::invalid_argument("split_sinogram: K must divide n_angles");
    std::vector<Sinogram> parts;
    parts.reserve(K);
    for (int j = 0; j < K; ++j) {
        Sinogram part(g.subset(K, j));
        for (int row = 0; row < part.geometry.n_angles(); ++row) {
            const double* src = sinogram.data.row(j + row * K);
            std::copy(src, src + g.detector_count, part.data.row(row));
        }
        parts.push_back(std::move(part));
    }
    return parts;
}

Sinogram merge_sinograms(std::span<const Sinogram> parts, const Geometry& full) {
    const int K = static_cast<int>(parts.size());
    if (K < 1 || full.n_angles() % K != 0)
        throw std::invalid_argument("merge_sinograms: part count must divide n_angles");
    Sinogram out(full);
    for (int j = 0; j < K; ++j) {
        if (parts[j].data.rows() * K != full.n_angles() || parts[j].data.cols() != full.detector_count)
            throw std::invalid_argument("merge_sinograms: part shape mismatch");
        for (int row = 0; row < parts[j].data.rows(); ++row) {
            const double* src = parts[j].data.row(row);
            std::copy(src, src + full.detector_count, out.data.row(j + row * K));
        }
    }
    return out;
}

Image mean_of(std::span<const Image> images, std::span<const int> indices) {
    if (indices.empty()) throw std::invalid_argument("mean_of: empty selection");
    Image out(images[indices[0]].rows(), images[indices[0]].cols());
    for (int idx : indices) {
        const Image& img = images[idx];
        if (!img.same_shape(out)) throw std::invalid_argument("mean_of: shape mismatch");
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += img[i];
    }
    const double scale = 1.0 / static_cast<double>(indices.size());
    for (double& v : out.values()) v *= scale;
    return out;
}

std::vector<DatasetPair> build_pairs(std::span<const Image> sub_reconstructions,
                                     const SplitScheme& scheme, int slice_id) {
    if (static_cast<int>(sub_reconstructions.size()) != scheme.k)
        throw std::invalid_argument("build_pairs: expected K sub-reconstructions");
    std::vector<DatasetPair> pairs;
    pairs.reserve(scheme.k);
    for (int j = 0; j < scheme.k; ++j) {
        DatasetPair pair;
        pair.input = mean_of(sub_reconstructions, scheme.input_indices(j));
        pair.target = mean_of(sub_reconstructions, scheme.target_indices(j));
        pair.slice_id = slice_id;
        pair.section = j;
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

Mask MaskPartition::class_mask(int rows, int cols, int phase) const {
    if (stride < 1 || phase < 0 || phase >= phase_count())
        throw std::invalid_argument("MaskPartition: phase out of range");
    Mask mask(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) mask(r, c) = phase_of(r, c) == phase ? 1 : 0;
    return mask;
}

MaskedInput mask_partition_pairs(const Image& noisy, const MaskPartition& partition, int phase) {
    MaskedInput out{noisy, partition.class_mask(noisy.rows(), noisy.cols(), phase)};
    for (int r = 0; r < noisy.rows(); ++r) {
        for (int c = 0; c < noisy.cols(); ++c) {
            if (!out.target_mask(r, c)) continue;
            double sum = 0.0;
            int count = 0;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    const int rr = r + dr, cc = c + dc;
                    if (rr < 0 || rr >= noisy.rows() || cc < 0 || cc >= noisy.cols()) continue;
                    sum += noisy(rr, cc);
                    ++count;
                }
            }
            out.input(r, c) = count > 0 ? sum / count : noisy(r, c);
        }
    }
    return out;
}

}  // namespace n2i
