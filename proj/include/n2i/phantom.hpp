#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "n2i/geometry.hpp"
#include "n2i/grid.hpp"

namespace n2i {

struct Disk {
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.0;
    double density = 0.0;

    friend bool operator==(const Disk&, const Disk&) = default;
};

/// Cylinder of density 1 with non-overlapping bubbles of density 0 strictly
/// inside it. Densities are absolute: a point inside a bubble has the
/// bubble's density.
struct FoamPhantom {
    Disk cylinder;
    std::vector<Disk> bubbles;
    std::uint64_t seed = 0;

    /// Equivalent list of disks whose densities add up: the cylinder followed
    /// by each bubble carrying (bubble density - cylinder density).
    std::vector<Disk> additive_disks() const;

    friend bool operator==(const FoamPhantom&, const FoamPhantom&) = default;
};

/// Placement gives up after this many rejected candidate centres.
inline constexpr long kMaxPlacementAttempts = 1'000'000;

/// Rejection-sampled foam. Radii are drawn uniformly from
/// [min_radius, max_radius] and placed largest first; each centre is drawn
/// uniformly in the disk that keeps the bubble strictly inside the cylinder.
FoamPhantom generate_foam(int n_bubbles, double min_radius, double max_radius,
                          double cylinder_radius, std::uint64_t seed);

/// Length of the chord cut from the line {p : <p, u> = t} by a disk.
double disk_chord(const Disk& disk, double cos_theta, double sin_theta, double t);

/// Exact line integrals through additive disks, averaged over `supersampling`
/// parallel rays per detector bin at offsets ((k + 0.5) / s - 0.5) bins.
Sinogram analytic_sinogram(std::span<const Disk> disks, const Geometry& geometry,
                           int supersampling = 4);
Sinogram analytic_sinogram(const FoamPhantom& phantom, const Geometry& geometry,
                           int supersampling = 4);

/// Area fractions from 4x4 sub-pixel membership sampling.
Image rasterize(std::span<const Disk> disks, int image_size);
Image rasterize(const FoamPhantom& phantom, int image_size);

/// Plain-text record list: one disk per line, "cx cy r density", cylinder
/// first. Values are written with round-trip precision.
void write_phantom(std::ostream& out, const FoamPhantom& phantom);
FoamPhantom read_phantom(std::istream& in);

}  // namespace n2i
