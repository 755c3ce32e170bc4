#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "n2i/geometry.hpp"
#include "n2i/grid.hpp"

namespace n2i {

/// Plain-text sidecar stored next to every artifact as "<path>.meta".
struct ArtifactMeta {
    std::string dtype = "float32";
    int rows = 0;
    int cols = 0;
    int slices = 0;
    std::string stage;
    std::string config_hash;
    /// Present for sinograms and sub-sinograms.
    std::optional<Geometry> geometry;
};

std::string sidecar_path(const std::string& path);
void write_sidecar(const std::string& path, const ArtifactMeta& meta);
ArtifactMeta read_sidecar(const std::string& path);

/// Raw little-endian float32, row-major, slices one after another, plus the
/// sidecar. All slices must share one shape.
void write_stack(const std::string& path, std::span<const Image> slices, ArtifactMeta meta);

struct Stack {
    ArtifactMeta meta;
    std::vector<Image> slices;
};

/// Throws std::runtime_error when the file is missing or its size does not
/// match the sidecar.
Stack read_stack(const std::string& path);

/// Requires a geometry in the sidecar whose shape matches the slices.
std::vector<Sinogram> stack_sinograms(const Stack& stack);

/// 8-bit grayscale PNG; values are clamped to [window_min, window_max].
void write_png(const std::string& path, const Image& image, double window_min, double window_max);

/// Shortest text that parses back to the same double; "inf"/"-inf"/"nan".
std::string format_number(double value);

struct MetricRow {
    std::string run_id;
    std::string method;
    double alpha = 0.0;
    double photon_count = 0.0;
    int n_angles = 0;
    int k = 0;
    std::string strategy;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct TheoryRow {
    std::string term;
    double estimate = 0.0;
    double std_error = 0.0;
};

std::string metrics_csv(std::span<const MetricRow> rows);
std::string theory_csv(std::span<const TheoryRow> rows);
std::string loss_csv(std::span<const double> epoch_losses);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace n2i
