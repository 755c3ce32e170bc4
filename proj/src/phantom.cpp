#include "n2i/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "n2i/errors.hpp"
#include "n2i/parallel.hpp"
#include "n2i/rng.hpp"

namespace n2i {

std::vector<Disk> FoamPhantom::additive_disks() const {
    std::vector<Disk> disks;
    disks.reserve(bubbles.size() + 1);
    disks.push_back(cylinder);
    for (const Disk& b : bubbles)
        disks.push_back({b.cx, b.cy, b.radius, b.density - cylinder.density});
    return disks;
}

FoamPhantom generate_foam(int n_bubbles, double min_radius, double max_radius,
                          double cylinder_radius, std::uint64_t seed) {
    if (n_bubbles < 0) throw std::invalid_argument("generate_foam: n_bubbles must be >= 0");
    if (!(cylinder_radius > 0.0))
        throw std::invalid_argument("generate_foam: cylinder radius must be positive");
    if (!(min_radius > 0.0) || min_radius > max_radius || !(max_radius < cylinder_radius))
        throw std::invalid_argument("generate_foam: radius range must lie in (0, cylinder_radius)");

    FoamPhantom foam;
    foam.cylinder = {0.0, 0.0, cylinder_radius, 1.0};
    foam.seed = seed;

    std::mt19937_64 gen(derive_seed(seed, 0));
    std::uniform_real_distribution<double> radius_dist(min_radius, max_radius);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<double> radii(n_bubbles);
    for (double& r : radii) r = radius_dist(gen);
    std::sort(radii.begin(), radii.end(), std::greater<>());

    long attempts = 0;
    for (double r : radii) {
        // Strictly inside: |c| + r < R.
        const double reach = cylinder_radius - r;
        for (;;) {
            if (attempts >= kMaxPlacementAttempts)
                throw CapacityError("generate_foam: placed " + std::to_string(foam.bubbles.size()) +
                                        " of " + std::to_string(n_bubbles) + " bubbles after " +
                                        std::to_string(attempts) + " attempts",
                                    static_cast<int>(foam.bubbles.size()));
            const double rho = reach * std::sqrt(unit(gen));
            const double phi = 2.0 * std::numbers::pi * unit(gen);
            const Disk candidate{rho * std::cos(phi), rho * std::sin(phi), r, 0.0};
            const bool inside = std::hypot(candidate.cx, candidate.cy) + r < cylinder_radius;
            const bool free = std::none_of(foam.bubbles.begin(), foam.bubbles.end(), [&](const Disk& b) {
                return std::hypot(b.cx - candidate.cx, b.cy - candidate.cy) <= b.radius + r;
            });
            if (inside && free) {
                foam.bubbles.push_back(candidate);
                break;
            }
            ++attempts;
        }
    }
    return foam;
}

double disk_chord(const Disk& disk, double cos_theta, double sin_theta, double t) {
    const double d = t - (disk.cx * cos_theta + disk.cy * sin_theta);
    const double h = disk.radius * disk.radius - d * d;
    return h > 0.0 ? 2.0 * std::sqrt(h) : 0.0;
}

Sinogram analytic_sinogram(std::span<const Disk> disks, const Geometry& geometry,
                           int supersampling) {
    if (supersampling < 1)
        throw std::invalid_argument("analytic_sinogram: supersampling must be >= 1");
    Sinogram sino(geometry);
    const int n_det = geometry.detector_count;
    parallel_for(geometry.n_angles(), [&](std::size_t a) {
        const double c = std::cos(geometry.angles[a]);
        const double s = std::sin(geometry.angles[a]);
        double* out = sino.data.row(static_cast<int>(a));
        for (int k = 0; k < n_det; ++k) {
            double sum = 0.0;
            for (int ray = 0; ray < supersampling; ++ray) {
                const double offset = (ray + 0.5) / supersampling - 0.5;
                const double t = geometry.detector_position(k) + offset * geometry.detector_pixel_size;
                for (const Disk& disk : disks) sum += disk.density * disk_chord(disk, c, s, t);
            }
            out[k] = sum / supersampling;
        }
    });
    return sino;
}

Sinogram analytic_sinogram(const FoamPhantom& phantom, const Geometry& geometry, int supersampling) {
    const auto disks = phantom.additive_disks();
    return analytic_sinogram(disks, geometry, supersampling);
}

Image rasterize(std::span<const Disk> disks, int image_size) {
    if (image_size < 1) throw std::invalid_argument("rasterize: image_size must be >= 1");
    constexpr int kSub = 4;
    const double ps = 2.0 / image_size;
    Image img(image_size, image_size);
    for (int r = 0; r < image_size; ++r) {
        for (int col = 0; col < image_size; ++col) {
            double sum = 0.0;
            for (int sy = 0; sy < kSub; ++sy) {
                const double y = -1.0 + (r + (sy + 0.5) / kSub) * ps;
                for (int sx = 0; sx < kSub; ++sx) {
                    const double x = -1.0 + (col + (sx + 0.5) / kSub) * ps;
                    for (const Disk& d : disks) {
                        const double dx = x - d.cx, dy = y - d.cy;
                        if (dx * dx + dy * dy < d.radius * d.radius) sum += d.density;
                    }
                }
            }
            img(r, col) = sum / (kSub * kSub);
        }
    }
    return img;
}

Image rasterize(const FoamPhantom& phantom, int image_size) {
    const auto disks = phantom.additive_disks();
    return rasterize(disks, image_size);
}

void write_phantom(std::ostream& out, const FoamPhantom& phantom) {
    out << "# seed " << phantom.seed << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    auto line = [&](const Disk& d) {
        out << d.cx << ' ' << d.cy << ' ' << d.radius << ' ' << d.density << '\n';
    };
    line(phantom.cylinder);
    for (const Disk& b : phantom.bubbles) line(b);
}

FoamPhantom read_phantom(std::istream& in) {
    FoamPhantom foam;
    bool have_cylinder = false;
    std::string text;
    while (std::getline(in, text)) {
        if (text.empty()) continue;
        if (text[0] == '#') {
            std::istringstream meta(text.substr(1));
            std::string key;
            if (meta >> key && key == "seed") meta >> foam.seed;
            continue;
        }
        std::istringstream fields(text);
        Disk d;
        if (!(fields >> d.cx >> d.cy >> d.radius >> d.density))
            throw std::invalid_argument("read_phantom: malformed record '" + text + "'");
        if (!have_cylinder) {
            foam.cylinder = d;
            have_cylinder = true;
        } else {
            foam.bubbles.push_back(d);
        }
    }
    if (!have_cylinder) throw std::invalid_argument("read_phantom: no records");
    return foam;
}

}  // namespace n2i
