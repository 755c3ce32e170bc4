#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "n2i/datasplit.hpp"
#include "n2i/network.hpp"
#include "n2i/noise.hpp"
#include "n2i/train.hpp"

namespace n2i {

struct PhantomSpec {
    int image_size = 128;
    int slices = 64;
    int bubbles = 40;
    double min_radius = 0.03;
    double max_radius = 0.12;
    double cylinder_radius = 0.9;
};

struct GeometrySpec {
    int n_angles = 128;
    /// 0 selects default_detector_count(image_size).
    int detector_count = 0;
    double arc_degrees = 180.0;
};

struct NoiseSpec {
    /// "poisson" or "gaussian".
    std::string model = "poisson";
    /// Target absorption for the Poisson model; 0 leaves the phantom unscaled.
    double alpha = 0.2;
    double photon_count = 100.0;
    double sigma = 0.0;
    NoiseDomain domain = NoiseDomain::sinogram;
};

struct BaselineSpec {
    int sirt_iterations = 50;
    int tv_iterations = 100;
    int tv_inner_iterations = 20;
    /// Exponential lambda grid: lambda_min * ratio^i for i < lambda_count.
    double lambda_min = 1e-3;
    double lambda_ratio = 4.0;
    int lambda_count = 6;
};

struct RunConfig {
    std::string run_id = "run";
    std::uint64_t seed = 0;
    std::string output = "out";
    PhantomSpec phantom;
    GeometrySpec geometry;
    NoiseSpec noise;
    SplitScheme split;
    NetworkConfig network;
    TrainConfig train;
    BaselineSpec baseline;
    /// Noise2Self masking grid stride and masked samples per slice per epoch.
    int mask_stride = 4;
    int masks_per_slice = 4;

    /// Throws std::invalid_argument naming the first invalid field.
    void validate() const;
    NoiseModel noise_model() const;
    /// Stage seeds are derived from the global seed; the network and shuffle
    /// seeds in the sub-configs are overwritten from it.
    std::uint64_t stage_seed(std::uint64_t stage) const;
};

/// Reads "key = value" lines grouped under "[section]" headers. Lines
/// starting with '#' are comments. Unknown sections or keys, duplicate keys
/// and malformed values throw std::invalid_argument with the line number.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

/// Canonical text form; parse_config(write_config(c)) reproduces c.
std::string write_config(const RunConfig& config);

/// 64-bit FNV-1a of the canonical text, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace n2i
